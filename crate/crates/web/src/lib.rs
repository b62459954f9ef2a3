//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string. The plain Rust functions behind them
//! are public so they can be exercised natively.

use serde::Serialize;
use veridebate_core::debate::run_debate;
use veridebate_core::encoding::{build_node, news_node, EmbeddingProvider, HashingProvider, RoleTable};
use veridebate_core::evaluation::{
    compute_metrics, generate_synthetic, MetricsReport, SyntheticConfig, SyntheticItem, SyntheticVariant,
};
use veridebate_core::gateway::Gateway;
use veridebate_core::graph::{build_graph, DebateGraph, NodeMeta};
use veridebate_core::neural::{decide, train, AnalysisModel, GraphSample, InteractionMode, ModelConfig, TrainConfig};
use veridebate_core::synthesis::synthesize;
use veridebate_core::{DebateConfig, DebateLog, DebateTurn, Error, NewsItem, Split};
use wasm_bindgen::prelude::*;

const DEMO_DIM: usize = 128;

fn demo_model_config(mode: InteractionMode) -> ModelConfig {
    ModelConfig {
        embed_dim: DEMO_DIM,
        role_dim: 8,
        gat_layers: 2,
        gat_hidden: 32,
        proj_dim: 32,
        heads: 2,
        interaction_mode: mode,
    }
}

#[derive(Debug, Serialize)]
pub struct DebateView {
    pub turns: Vec<DebateTurn>,
    /// Undirected non-self edges, `a < b`, deduplicated.
    pub edges: Vec<(usize, usize)>,
    pub report: String,
    pub verdict: Option<String>,
}

fn simple_edges(g: &DebateGraph) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|(s, d)| s < d)
        .copied()
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

fn encode(log: &DebateLog, news: &str, provider: &HashingProvider, roles: &RoleTable) -> Result<GraphSample, Error> {
    let mut nodes = Vec::with_capacity(log.turns.len());
    for turn in &log.turns {
        nodes.push(build_node(turn, &provider.embed(&turn.text)?, roles)?);
    }
    let news = provider.embed(news)?;
    let graph = if nodes.is_empty() {
        DebateGraph::news_only(news_node(&news))?
    } else {
        build_graph(log, &nodes)?
    };
    Ok(GraphSample {
        graph,
        news: news.values,
        label: veridebate_core::Label::Real,
    })
}

fn mock_log(news: &str, seed: u64) -> Result<(NewsItem, DebateLog), Error> {
    let item = NewsItem::new("demo", news)?;
    let mut cfg = DebateConfig::default();
    cfg.generation.seed = seed;
    let log = run_debate(&item, &cfg, &Gateway::mock())?;
    Ok((item, log))
}

/// Runs the four-stage debate and the synthesis step against the mock backend.
pub fn debate_view(news: &str, seed: u64) -> Result<DebateView, Error> {
    let gw = Gateway::mock();
    let (item, log) = mock_log(news, seed)?;
    let report = synthesize(&log, &gw)?;
    let provider = HashingProvider::new(8, seed);
    let sample = encode(&log, &item.content, &provider, &RoleTable::zeros(8, 2))?;
    Ok(DebateView {
        edges: simple_edges(&sample.graph),
        turns: log.turns,
        report: report.text,
        verdict: report.verdict_hint.map(|v| format!("{v:?}").to_lowercase()),
    })
}

#[derive(Debug, Serialize)]
pub struct NodeAttention {
    pub label: String,
    /// `(neighbor, weight)` pairs from the last graph-attention layer.
    pub neighbors: Vec<(usize, f64)>,
}

#[derive(Debug, Serialize)]
pub struct AttentionView {
    pub nodes: Vec<NodeAttention>,
    /// Per head: weight on each key. A single key in pooled mode.
    pub heads: Vec<Vec<f64>>,
    pub p_real: f64,
    pub p_fake: f64,
}

/// Attention weights of a freshly initialized model on the mock debate.
pub fn attention_view(news: &str, seed: u64, pooled: bool) -> Result<AttentionView, Error> {
    let mode = if pooled { InteractionMode::Pooled } else { InteractionMode::Nodes };
    let model = AnalysisModel::new(demo_model_config(mode), seed)?;
    let (item, log) = mock_log(news, seed)?;
    let provider = HashingProvider::new(DEMO_DIM, seed);
    let sample = encode(&log, &item.content, &provider, &model.role_table())?;
    let trace = model.trace(&sample.graph, &sample.news)?;
    let last = trace.gat.last().expect("at least one layer");
    let nodes = sample
        .graph
        .node_meta()
        .iter()
        .enumerate()
        .map(|(i, meta)| NodeAttention {
            label: match meta {
                NodeMeta::Turn { stance, role, .. } => format!("{i}: {} {role:?}", stance.team_name()),
                NodeMeta::News => format!("{i}: news"),
            },
            neighbors: sample
                .graph
                .in_neighbors(i)
                .iter()
                .copied()
                .zip(last.alpha[i].iter().copied())
                .collect(),
        })
        .collect();
    Ok(AttentionView {
        nodes,
        heads: trace.interact.weights.clone(),
        p_real: trace.probs[0],
        p_fake: trace.probs[1],
    })
}

#[derive(Debug, Serialize)]
pub struct TrainingView {
    pub loss_history: Vec<f64>,
    pub metrics: MetricsReport,
}

fn samples(items: &[SyntheticItem], split: Split, provider: &HashingProvider, roles: &RoleTable) -> Result<Vec<GraphSample>, Error> {
    items
        .iter()
        .filter(|it| it.item.split == Some(split))
        .map(|it| {
            let mut s = encode(&it.log, &it.item.content, provider, roles)?;
            s.label = it.item.label.expect("synthetic items are labeled");
            Ok(s)
        })
        .collect()
}

/// Trains on a small synthetic set and scores its held-out part. Without
/// `role_aware` the role table is zeroed and frozen.
pub fn train_view(epochs: usize, learning_rate: f64, role_dependent: bool, role_aware: bool, seed: u64) -> Result<TrainingView, Error> {
    let items = generate_synthetic(&SyntheticConfig {
        train: 500,
        val: 0,
        test: 100,
        seed,
        variant: if role_dependent { SyntheticVariant::RoleDependent } else { SyntheticVariant::Planted },
    });
    let mut model = AnalysisModel::new(demo_model_config(InteractionMode::Nodes), seed)?;
    let mut cfg = TrainConfig {
        epochs,
        batch_size: 16,
        seed,
        ..Default::default()
    };
    cfg.adam.learning_rate = learning_rate;
    if !role_aware {
        model.set_role_table(&RoleTable::zeros(DEMO_DIM, 8))?;
        cfg.frozen.push("role.".into());
    }
    let provider = HashingProvider::new(DEMO_DIM, seed);
    let roles = model.role_table();
    let train_set = samples(&items, Split::Train, &provider, &roles)?;
    let test_set = samples(&items, Split::Test, &provider, &roles)?;
    let report = train(&mut model, &train_set, &[], &cfg)?;
    let mut preds = Vec::with_capacity(test_set.len());
    for s in &test_set {
        preds.push(decide(&model.predict(&s.graph, &s.news)?));
    }
    let labels: Vec<_> = test_set.iter().map(|s| s.label).collect();
    Ok(TrainingView {
        loss_history: report.loss_history,
        metrics: compute_metrics(&preds, &labels)?,
    })
}

fn to_js<T: Serialize>(r: Result<T, Error>) -> Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    Ok(serde_json::to_string(&v)?)
}

#[wasm_bindgen]
pub fn debate(news: &str, seed: u64) -> Result<String, JsError> {
    to_js(debate_view(news, seed))
}

#[wasm_bindgen]
pub fn attention(news: &str, seed: u64, pooled: bool) -> Result<String, JsError> {
    to_js(attention_view(news, seed, pooled))
}

#[wasm_bindgen]
pub fn train_synthetic(epochs: usize, learning_rate: f64, role_dependent: bool, role_aware: bool, seed: u64) -> Result<String, JsError> {
    to_js(train_view(epochs, learning_rate, role_dependent, role_aware, seed))
}

