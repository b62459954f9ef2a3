//! Configuration, run workspaces, and the stage commands behind the CLI.
//!
//! A run lives under `<out>/<run_id>/`:
//!
//! ```text
//! config.toml          resolved configuration
//! transcripts/<id>.json
//! reports/<id>.json
//! embeddings/          cached text embeddings
//! graphs/              <id>.graph.json, <id>.nodes.f32, <id>.news.f32
//! model.ckpt  train_report.json
//! predictions.jsonl  metrics.json  metrics.txt  explanations.jsonl
//! ablation/<variant>/  per-variant models, predictions and metrics
//! ```

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::debate::DebateEngine;
use crate::domain::{DebateConfig, DebateLog, Label, Language, NewsItem, Split, SummaryReport, VerdictHint};
use crate::encoding::{
    build_node, news_node, write_f32_vectors, CachedProvider, EmbeddingProvider, HashingProvider, RoleTable,
    VectorSidecar, DEFAULT_EMBED_DIM,
};
use crate::error::{DatasetError, Error, NeuralError};
use crate::evaluation::{
    compute_metrics, read_predictions, write_predictions, Dataset, MetricsReport, PredictionRecord,
};
use crate::gateway::{Gateway, GatewayConfig, MockBackend};
use crate::graph::{build_graph, DebateGraph};
use crate::neural::{
    decide, load_checkpoint, save_checkpoint, train, AnalysisModel, GraphSample, ModelConfig, TrainConfig,
    TrainReport,
};
use crate::synthesis::SynthesisAgent;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "mock" => Ok(BackendKind::Mock),
            "remote" => Ok(BackendKind::Remote),
            other => Err(format!("unknown backend {other:?} (expected mock|remote)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewaySection {
    pub backend: BackendKind,
    /// Chat-completions URL for the remote backend.
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    #[serde(flatten)]
    pub limits: GatewayConfig,
}

impl Default for GatewaySection {
    fn default() -> Self {
        GatewaySection {
            backend: BackendKind::Mock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            timeout_secs: 120,
            limits: GatewayConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    #[default]
    Hashing,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingSection {
    pub provider: EmbeddingKind,
    pub dim: usize,
    /// Seed of the hashing provider's token directions.
    pub hashing_seed: u64,
    pub endpoint: String,
    pub model: String,
}

impl Default for EmbeddingSection {
    fn default() -> Self {
        EmbeddingSection {
            provider: EmbeddingKind::Hashing,
            dim: DEFAULT_EMBED_DIM,
            hashing_seed: 0,
            endpoint: "https://api.openai.com/v1/embeddings".into(),
            model: "text-embedding-3-small".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathsSection {
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    /// Defaults to `<unix-seconds>-seed<seed>`.
    pub run_id: Option<String>,
}

impl Default for PathsSection {
    fn default() -> Self {
        PathsSection {
            dataset: None,
            out: PathBuf::from("runs"),
            run_id: None,
        }
    }
}

/// The full experiment manifest. `seed` drives generation, initialization and
/// shuffling; `[model] embed_dim` always follows `[embedding] dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub strict: bool,
    pub language: Language,
    pub gateway: GatewaySection,
    pub debate: DebateConfig,
    pub synthesis_history_budget_chars: usize,
    pub embedding: EmbeddingSection,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub paths: PathsSection,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            strict: false,
            language: Language::En,
            gateway: GatewaySection::default(),
            debate: DebateConfig::default(),
            synthesis_history_budget_chars: 48_000,
            embedding: EmbeddingSection::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            paths: PathsSection::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg.resolved())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Propagates the shared seed and embedding width into the sections that
    /// carry their own copies.
    pub fn resolved(mut self) -> Self {
        self.debate.generation.seed = self.seed;
        self.train.seed = self.seed;
        self.model.embed_dim = self.embedding.dim;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.resolved()
    }

    pub fn check(&self) -> Result<()> {
        self.debate.check()?;
        self.model.check()?;
        if self.embedding.dim == 0 {
            return Err(Error::Config("embedding dim must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Directory layout of one run. Variant runs share transcripts, reports and
/// embeddings with their parent.
#[derive(Debug, Clone)]
pub struct Run {
    pub root: PathBuf,
    shared: PathBuf,
    pub config: PipelineConfig,
}

impl Run {
    /// Creates `<out>/<run_id>` and writes the resolved config into it.
    pub fn create(config: &PipelineConfig) -> Result<Run> {
        config.check()?;
        let run_id = config.paths.run_id.clone().unwrap_or_else(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            format!("{secs}-seed{}", config.seed)
        });
        Self::open(config.paths.out.join(run_id), config)
    }

    /// Opens (or creates) a run at an explicit directory.
    pub fn open(root: PathBuf, config: &PipelineConfig) -> Result<Run> {
        let run = Run {
            shared: root.clone(),
            root,
            config: config.clone(),
        };
        for dir in [run.transcripts_dir(), run.reports_dir(), run.embeddings_dir(), run.graphs_dir()] {
            std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        }
        let cfg_path = run.root.join("config.toml");
        std::fs::write(&cfg_path, config.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
        Ok(run)
    }

    pub fn variant(&self, name: &str) -> Result<Run> {
        let run = Run {
            root: self.root.join("ablation").join(name),
            shared: self.shared.clone(),
            config: self.config.clone(),
        };
        let graphs = run.graphs_dir();
        std::fs::create_dir_all(&graphs).map_err(|e| Error::io(&graphs, e))?;
        Ok(run)
    }

    pub fn transcripts_dir(&self) -> PathBuf {
        self.shared.join("transcripts")
    }
    pub fn reports_dir(&self) -> PathBuf {
        self.shared.join("reports")
    }
    pub fn embeddings_dir(&self) -> PathBuf {
        self.shared.join("embeddings")
    }
    pub fn graphs_dir(&self) -> PathBuf {
        self.root.join("graphs")
    }
    pub fn transcript_path(&self, id: &str) -> PathBuf {
        self.transcripts_dir().join(format!("{}.json", file_stem(id)))
    }
    pub fn report_path(&self, id: &str) -> PathBuf {
        self.reports_dir().join(format!("{}.json", file_stem(id)))
    }
    pub fn checkpoint_path(&self) -> PathBuf {
        self.root.join("model.ckpt")
    }
    pub fn train_report_path(&self) -> PathBuf {
        self.root.join("train_report.json")
    }
    pub fn predictions_path(&self) -> PathBuf {
        self.root.join("predictions.jsonl")
    }
    pub fn metrics_json_path(&self) -> PathBuf {
        self.root.join("metrics.json")
    }
    pub fn metrics_text_path(&self) -> PathBuf {
        self.root.join("metrics.txt")
    }
    pub fn explanations_path(&self) -> PathBuf {
        self.root.join("explanations.jsonl")
    }
}

/// Ids become file names; anything outside `[A-Za-z0-9._-]` is replaced.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

/// Writes through a temporary file so an interrupted run never leaves a
/// partial artifact that a resumed run would skip.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn build_gateway(section: &GatewaySection, default_cache: &Path) -> Result<Gateway> {
    let mut limits = section.limits.clone();
    if limits.cache && limits.cache_dir.is_none() {
        limits.cache_dir = Some(default_cache.to_path_buf());
    }
    match section.backend {
        BackendKind::Mock => Ok(Gateway::new(Box::new(MockBackend::new()), &limits)),
        #[cfg(feature = "remote")]
        BackendKind::Remote => {
            let key = std::env::var(crate::gateway::API_KEY_ENV)
                .map_err(|_| Error::Config(format!("{} is not set", crate::gateway::API_KEY_ENV)))?;
            let backend = crate::gateway::ChatCompletionBackend::new(
                section.endpoint.clone(),
                section.model.clone(),
                Some(key),
                std::time::Duration::from_secs(section.timeout_secs),
            );
            Ok(Gateway::new(Box::new(backend), &limits))
        }
        #[cfg(not(feature = "remote"))]
        BackendKind::Remote => Err(Error::Config("built without the `remote` feature".into())),
    }
}

pub fn build_provider(section: &EmbeddingSection, cache_dir: &Path) -> Result<CachedProvider<Box<dyn EmbeddingProvider>>> {
    let inner: Box<dyn EmbeddingProvider> = match section.provider {
        EmbeddingKind::Hashing => Box::new(HashingProvider::new(section.dim, section.hashing_seed)),
        #[cfg(feature = "remote")]
        EmbeddingKind::Remote => Box::new(crate::encoding::RemoteEmbeddingProvider::new(
            section.endpoint.clone(),
            section.model.clone(),
            section.dim,
            std::env::var(crate::gateway::API_KEY_ENV).ok(),
        )),
        #[cfg(not(feature = "remote"))]
        EmbeddingKind::Remote => return Err(Error::Config("built without the `remote` feature".into())),
    };
    Ok(CachedProvider::new(inner, cache_dir.to_path_buf()))
}

/// Per-stage item tally.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSummary {
    pub processed: usize,
    pub skipped: usize,
    pub failed: usize,
}

impl StageSummary {
    fn finish(self, strict: bool) -> Result<Self> {
        if strict && self.failed > 0 {
            return Err(Error::ItemFailures {
                failed: self.failed,
                total: self.processed + self.skipped + self.failed,
            });
        }
        Ok(self)
    }
}

/// Runs `work` over every item in parallel, at most `workers` at a time.
/// `work` returns `Ok(true)` when it produced output, `Ok(false)` when it
/// skipped the item.
fn for_each_item<F>(items: &[&NewsItem], workers: usize, work: F) -> StageSummary
where
    F: Fn(&NewsItem) -> Result<bool> + Sync,
{
    let next = AtomicUsize::new(0);
    let summary = Mutex::new(StageSummary::default());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, items.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(i) else { break };
                let outcome = work(item);
                let mut sum = summary.lock().expect("summary lock");
                match outcome {
                    Ok(true) => sum.processed += 1,
                    Ok(false) => sum.skipped += 1,
                    Err(e) => {
                        log::error!("item {}: {e}", item.id);
                        sum.failed += 1;
                    }
                }
            });
        }
    });
    summary.into_inner().expect("summary lock")
}

/// One transcript per item; existing transcripts are left alone.
pub fn cmd_debate(run: &Run, items: &[&NewsItem], gateway: &Gateway) -> Result<StageSummary> {
    let engine = DebateEngine::new(run.config.debate.clone());
    let summary = for_each_item(items, gateway.max_concurrency(), |item| {
        let path = run.transcript_path(&item.id);
        if path.exists() {
            return Ok(false);
        }
        let log = engine.run(item, gateway)?;
        write_atomic(&path, log.to_json().as_bytes())?;
        Ok(true)
    });
    log::info!("debate: {summary:?}");
    summary.finish(run.config.strict)
}

pub fn read_transcript(run: &Run, id: &str) -> Result<DebateLog> {
    read_json(&run.transcript_path(id))
}

/// One report per transcript; existing reports are left alone.
pub fn cmd_synthesize(run: &Run, items: &[&NewsItem], gateway: &Gateway) -> Result<StageSummary> {
    let agent = SynthesisAgent {
        language: run.config.language,
        generation: run.config.debate.generation.clone(),
        history_budget_chars: run.config.synthesis_history_budget_chars,
    };
    let summary = for_each_item(items, gateway.max_concurrency(), |item| {
        let path = run.report_path(&item.id);
        if path.exists() {
            return Ok(false);
        }
        let log = read_transcript(run, &item.id)?;
        let report = agent.synthesize(&log, gateway)?;
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_atomic(&path, json.as_bytes())?;
        Ok(true)
    });
    log::info!("synthesize: {summary:?}");
    summary.finish(run.config.strict)
}

pub fn read_report(run: &Run, id: &str) -> Result<SummaryReport> {
    read_json(&run.report_path(id))
}

/// Builds the graph sample for one item. With `news_only` the graph is a
/// single node holding the news embedding and no transcript is read.
pub fn encode_item(
    run: &Run,
    item: &NewsItem,
    provider: &dyn EmbeddingProvider,
    roles: &RoleTable,
    news_only: bool,
) -> Result<(DebateGraph, Vec<f64>)> {
    let news = provider.embed(&item.content)?;
    let graph = if news_only {
        DebateGraph::news_only(news_node(&news))?
    } else {
        let log = read_transcript(run, &item.id)?;
        let mut nodes = Vec::with_capacity(log.turns.len());
        for turn in &log.turns {
            nodes.push(build_node(turn, &provider.embed(&turn.text)?, roles)?);
        }
        build_graph(&log, &nodes)?
    };
    Ok((graph, news.values))
}

/// Role table used for the node vectors written to disk before training.
fn initial_roles(config: &PipelineConfig) -> Result<RoleTable> {
    Ok(AnalysisModel::new(config.model.clone(), config.seed)?.role_table())
}

/// Embeds transcripts and news and writes graph artifacts.
pub fn cmd_encode<P: EmbeddingProvider>(
    run: &Run,
    items: &[&NewsItem],
    provider: &P,
    news_only: bool,
) -> Result<StageSummary> {
    let roles = initial_roles(&run.config)?;
    let mut summary = StageSummary::default();
    for item in items {
        let stem = file_stem(&item.id);
        let outcome = encode_item(run, item, provider, &roles, news_only).and_then(|(graph, news)| {
            let dir = run.graphs_dir();
            graph
                .save(&dir, &stem, provider.id())
                .map_err(|e| Error::io(&dir, e))?;
            let side = VectorSidecar {
                dim: news.len(),
                provider_id: provider.id().to_string(),
            };
            let path = dir.join(format!("{stem}.news.f32"));
            write_f32_vectors(&path, &news, &side).map_err(|e| Error::io(&path, e))
        });
        match outcome {
            Ok(()) => summary.processed += 1,
            Err(e) => {
                log::error!("item {}: {e}", item.id);
                summary.failed += 1;
            }
        }
    }
    log::info!("encode: {summary:?}");
    summary.finish(run.config.strict)
}

fn samples_for<P: EmbeddingProvider>(
    run: &Run,
    items: &[&NewsItem],
    provider: &P,
    news_only: bool,
) -> Result<Vec<GraphSample>> {
    let roles = initial_roles(&run.config)?;
    items
        .iter()
        .map(|item| {
            let label = item
                .label
                .ok_or_else(|| Error::Config(format!("item {} has no label", item.id)))?;
            let (graph, news) = encode_item(run, item, provider, &roles, news_only)?;
            Ok(GraphSample { graph, news, label })
        })
        .collect()
}

pub fn split_items(dataset: &Dataset, split: Split) -> Vec<&NewsItem> {
    dataset.split(split).collect()
}

/// Training options beyond the config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOptions {
    /// Replace every turn graph by a single news node.
    pub news_only: bool,
    /// Zero the role table and keep it fixed.
    pub freeze_zero_roles: bool,
}

/// Trains on the train split, selecting on the val split when present, and
/// writes the checkpoint and the training report.
pub fn cmd_train<P: EmbeddingProvider>(
    run: &Run,
    dataset: &Dataset,
    provider: &P,
    opts: TrainOptions,
) -> Result<TrainReport> {
    let train_items = split_items(dataset, Split::Train);
    if train_items.is_empty() {
        return Err(DatasetError::MissingSplit("training").into());
    }
    let train_set = samples_for(run, &train_items, provider, opts.news_only)?;
    let val_set = samples_for(run, &split_items(dataset, Split::Val), provider, opts.news_only)?;
    let mut model = AnalysisModel::new(run.config.model.clone(), run.config.seed)?;
    let mut tc = run.config.train.clone();
    if opts.freeze_zero_roles {
        model.set_role_table(&RoleTable::zeros(run.config.model.embed_dim, run.config.model.role_dim))?;
        tc.frozen.push("role.".into());
    }
    let report = train(&mut model, &train_set, &val_set, &tc)?;
    save_checkpoint(&run.checkpoint_path(), &model, run.config.seed)?;
    let path = run.train_report_path();
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(report)
}

/// Scores the test split with the saved checkpoint.
pub fn cmd_predict<P: EmbeddingProvider>(
    run: &Run,
    dataset: &Dataset,
    provider: &P,
    news_only: bool,
) -> Result<Vec<PredictionRecord>> {
    let items = split_items(dataset, Split::Test);
    if items.is_empty() {
        return Err(DatasetError::MissingSplit("test").into());
    }
    let (model, _) = load_checkpoint(&run.checkpoint_path())?;
    if model.config.embed_dim != provider.dim() {
        return Err(NeuralError::DimensionMismatch(format!(
            "checkpoint expects {}-dim embeddings, provider gives {}",
            model.config.embed_dim,
            provider.dim()
        ))
        .into());
    }
    let roles = model.role_table();
    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let (graph, news) = encode_item(run, item, provider, &roles, news_only)?;
        let p = model.predict(&graph, &news)?;
        records.push(PredictionRecord {
            id: item.id.clone(),
            label: item.label,
            prediction: decide(&p),
            p_fake: p[1],
        });
    }
    write_predictions(&run.predictions_path(), &records).map_err(|e| Error::io(run.predictions_path(), e))?;
    Ok(records)
}

/// Predictions from the synthesis reports' verdict hints; undecided counts as
/// real.
pub fn cmd_predict_from_reports(run: &Run, dataset: &Dataset) -> Result<Vec<PredictionRecord>> {
    let items = split_items(dataset, Split::Test);
    if items.is_empty() {
        return Err(DatasetError::MissingSplit("test").into());
    }
    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let report = read_report(run, &item.id)?;
        let (prediction, p_fake) = match report.verdict_hint.unwrap_or(VerdictHint::Undecided) {
            VerdictHint::LeansFake => (Label::Fake, 1.0),
            VerdictHint::LeansReal => (Label::Real, 0.0),
            VerdictHint::Undecided => (Label::Real, 0.5),
        };
        records.push(PredictionRecord {
            id: item.id.clone(),
            label: item.label,
            prediction,
            p_fake,
        });
    }
    write_predictions(&run.predictions_path(), &records).map_err(|e| Error::io(run.predictions_path(), e))?;
    Ok(records)
}

/// Scores `predictions.jsonl` and writes `metrics.json` and `metrics.txt`.
pub fn cmd_evaluate(run: &Run) -> Result<MetricsReport> {
    let records = read_predictions(&run.predictions_path())?;
    let (preds, labels): (Vec<Label>, Vec<Label>) = records
        .iter()
        .filter_map(|r| r.label.map(|l| (r.prediction, l)))
        .unzip();
    let metrics = compute_metrics(&preds, &labels)?;
    std::fs::write(run.metrics_json_path(), metrics.to_json()).map_err(|e| Error::io(run.metrics_json_path(), e))?;
    std::fs::write(run.metrics_text_path(), metrics.to_text()).map_err(|e| Error::io(run.metrics_text_path(), e))?;
    Ok(metrics)
}

/// Ablation toggles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    /// Graph replaced by a single news node; no debates are run.
    NoDebate,
    /// Reports are not produced; predictions are unaffected.
    NoSynthesis,
    /// Predictions come from the report's verdict hint instead of the model.
    NoAnalysis,
    /// Role table zeroed and frozen.
    NoRole,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Full,
        Variant::NoDebate,
        Variant::NoSynthesis,
        Variant::NoAnalysis,
        Variant::NoRole,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoDebate => "no_debate",
            Variant::NoSynthesis => "no_synthesis",
            Variant::NoAnalysis => "no_analysis",
            Variant::NoRole => "no_role",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = DatasetError;
    fn from_str(s: &str) -> Result<Self, DatasetError> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| DatasetError::UnknownVariant(s.to_string()))
    }
}

/// One line of `explanations.jsonl`: the prediction with the paths of its
/// report and transcript, relative to the run root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub id: String,
    pub prediction: Label,
    pub p_fake: f64,
    pub report: Option<String>,
    pub transcript: Option<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub run_root: PathBuf,
    pub metrics: MetricsReport,
    pub debate: Option<StageSummary>,
    pub synthesis: Option<StageSummary>,
}

/// Runs one variant end to end inside `run`, reusing any existing
/// transcripts and reports. Stage failures are tagged with the stage name.
pub fn run_variant(run: &Run, dataset: &Dataset, gateway: &Gateway, variant: Variant) -> Result<PipelineOutcome> {
    if split_items(dataset, Split::Train).is_empty() && variant != Variant::NoAnalysis {
        return Err(DatasetError::MissingSplit("training").into());
    }
    let all: Vec<&NewsItem> = dataset.items.iter().collect();
    let wants_debate = variant != Variant::NoDebate;
    let wants_reports = matches!(variant, Variant::Full | Variant::NoAnalysis | Variant::NoRole);
    let news_only = variant == Variant::NoDebate;

    let debate = if wants_debate {
        Some(cmd_debate(run, &all, gateway).map_err(|e| e.in_stage("debate"))?)
    } else {
        None
    };
    let synthesis = if wants_reports {
        Some(cmd_synthesize(run, &all, gateway).map_err(|e| e.in_stage("synthesize"))?)
    } else {
        None
    };
    let records = if variant == Variant::NoAnalysis {
        cmd_predict_from_reports(run, dataset).map_err(|e| e.in_stage("predict"))?
    } else {
        let provider = build_provider(&run.config.embedding, &run.embeddings_dir()).map_err(|e| e.in_stage("encode"))?;
        cmd_encode(run, &all, &provider, news_only).map_err(|e| e.in_stage("encode"))?;
        let opts = TrainOptions {
            news_only,
            freeze_zero_roles: variant == Variant::NoRole,
        };
        cmd_train(run, dataset, &provider, opts).map_err(|e| e.in_stage("train"))?;
        cmd_predict(run, dataset, &provider, news_only).map_err(|e| e.in_stage("predict"))?
    };
    let metrics = cmd_evaluate(run).map_err(|e| e.in_stage("evaluate"))?;
    write_explanations(run, &records, wants_debate, wants_reports)?;
    Ok(PipelineOutcome {
        run_root: run.root.clone(),
        metrics,
        debate,
        synthesis,
    })
}

fn relative(run: &Run, path: &Path) -> String {
    let base = run.shared.as_path();
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().into_owned()
}

fn write_explanations(run: &Run, records: &[PredictionRecord], transcripts: bool, reports: bool) -> Result<()> {
    let mut out = String::new();
    for r in records {
        let e = Explanation {
            id: r.id.clone(),
            prediction: r.prediction,
            p_fake: r.p_fake,
            report: reports.then(|| relative(run, &run.report_path(&r.id))),
            transcript: transcripts.then(|| relative(run, &run.transcript_path(&r.id))),
        };
        out.push_str(&serde_json::to_string(&e).expect("explanation serializes"));
        out.push('\n');
    }
    let path = run.explanations_path();
    std::fs::write(&path, out).map_err(|e| Error::io(&path, e))
}

/// Full pipeline in a fresh run workspace.
pub fn cmd_pipeline(config: &PipelineConfig, dataset: &Dataset) -> Result<PipelineOutcome> {
    let run = Run::create(config)?;
    let gateway = build_gateway(&config.gateway, &config.paths.out.join("cache"))?;
    run_variant(&run, dataset, &gateway, Variant::Full)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: Variant,
    pub metrics: MetricsReport,
}

/// Runs each named variant in its own subdirectory of `run`, sharing
/// transcripts and reports. Names are validated before any work starts.
pub fn run_ablation(run: &Run, dataset: &Dataset, gateway: &Gateway, variants: &[String]) -> Result<Vec<AblationRow>> {
    let parsed: Vec<Variant> = variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::with_capacity(parsed.len());
    for v in parsed {
        let sub = run.variant(v.as_str())?;
        let outcome = run_variant(&sub, dataset, gateway, v)?;
        rows.push(AblationRow {
            variant: v,
            metrics: outcome.metrics,
        });
    }
    let json = serde_json::to_string_pretty(&rows).expect("rows serialize");
    let path = run.root.join("ablation.json");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    let path = run.root.join("ablation.txt");
    std::fs::write(&path, ablation_table(&rows)).map_err(|e| Error::io(&path, e))?;
    Ok(rows)
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!("{:<14}{:>8}{:>8}{:>9}{:>9}\n", "variant", "macF1", "Acc", "F1_real", "F1_fake");
    for r in rows {
        let m = &r.metrics;
        s.push_str(&format!(
            "{:<14}{:>8.4}{:>8.4}{:>9.4}{:>9.4}\n",
            r.variant.as_str(),
            m.macro_f1,
            m.accuracy,
            m.f1_real,
            m.f1_fake
        ));
    }
    s
}

/// Writes the transcripts of generated items into `run` (so the debate stage
/// skips them) and returns the items as a dataset.
pub fn install_synthetic(run: &Run, items: &[crate::evaluation::SyntheticItem]) -> Result<Dataset> {
    for it in items {
        write_atomic(&run.transcript_path(&it.item.id), it.log.to_json().as_bytes())?;
    }
    Ok(Dataset {
        items: items.iter().map(|it| it.item.clone()).collect(),
        language: Language::En,
    })
}
