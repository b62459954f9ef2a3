use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use veridebate_core::evaluation::{
    generate_synthetic, load_dataset, write_dataset, Dataset, LoadOptions, SyntheticConfig, SyntheticVariant,
};
use veridebate_core::neural::InteractionMode;
use veridebate_core::pipeline::{self, BackendKind, PipelineConfig, Run, TrainOptions, Variant};
use veridebate_core::{NewsItem, Split};

#[derive(Parser)]
#[command(name = "veridebate", version, about = "Debate-driven fake news detection")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// TOML config file; flags below override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// JSONL dataset with {id, content, label, split} per line.
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Root directory for run workspaces.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run workspace name under --out. Required by the single-stage commands.
    #[arg(long, global = true)]
    run_id: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["mock", "remote"])]
    backend: Option<String>,
    #[arg(long, global = true, value_parser = ["nodes", "pooled"])]
    interaction_mode: Option<String>,
    /// Fail on malformed dataset lines and on any per-item failure.
    #[arg(long, global = true)]
    strict: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Run debates for every item; existing transcripts are kept.
    Debate,
    /// Write a synthesis report for every transcript.
    Synthesize,
    /// Embed transcripts and write graph artifacts.
    Encode {
        #[arg(long)]
        no_debate: bool,
    },
    /// Train the classifier on the train split.
    Train {
        /// Use single news-node graphs instead of debate graphs.
        #[arg(long)]
        no_debate: bool,
        /// Zero the role table and keep it fixed.
        #[arg(long)]
        freeze_roles: bool,
    },
    /// Score the test split with the trained checkpoint.
    Predict {
        #[arg(long)]
        no_debate: bool,
    },
    /// Compute metrics from the run's predictions.
    Evaluate,
    /// Debate, synthesize, encode, train, predict and evaluate.
    Pipeline,
    /// Run ablation variants side by side.
    Ablate {
        /// Comma-separated: full, no_debate, no_synthesis, no_analysis, no_role.
        #[arg(long, value_delimiter = ',', default_value = "full,no_debate,no_synthesis,no_analysis")]
        variants: Vec<String>,
    },
    /// Generate a synthetic dataset with ready-made transcripts.
    Synthetic {
        #[arg(long, default_value_t = 500)]
        train: usize,
        #[arg(long, default_value_t = 0)]
        val: usize,
        #[arg(long, default_value_t = 200)]
        test: usize,
        #[arg(long, value_parser = ["planted", "role_dependent"], default_value = "planted")]
        variant: String,
    },
}

fn build_config(g: &GlobalOpts) -> Result<PipelineConfig> {
    let mut cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(p) = &g.dataset {
        cfg.paths.dataset = Some(p.clone());
    }
    if let Some(p) = &g.out {
        cfg.paths.out = p.clone();
    }
    if let Some(id) = &g.run_id {
        cfg.paths.run_id = Some(id.clone());
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(b) = &g.backend {
        cfg.gateway.backend = b.parse::<BackendKind>().map_err(anyhow::Error::msg)?;
    }
    if let Some(m) = &g.interaction_mode {
        cfg.model.interaction_mode = m.parse::<InteractionMode>().map_err(anyhow::Error::msg)?;
    }
    cfg.strict |= g.strict;
    Ok(cfg.resolved())
}

fn dataset(cfg: &PipelineConfig) -> Result<Dataset> {
    let path = cfg
        .paths
        .dataset
        .as_ref()
        .context("no dataset given (use --dataset or [paths] dataset)")?;
    let opts = LoadOptions {
        strict: cfg.strict,
        language: cfg.language,
        default_split: None,
    };
    Ok(load_dataset(path, &opts)?)
}

fn stage_run(cfg: &PipelineConfig) -> Result<Run> {
    if cfg.paths.run_id.is_none() {
        bail!("single-stage commands need --run-id to locate the run workspace");
    }
    Ok(Run::create(cfg)?)
}

fn report_summary(stage: &str, s: pipeline::StageSummary) {
    println!("{stage}: {} processed, {} skipped, {} failed", s.processed, s.skipped, s.failed);
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.global)?;
    match cli.command {
        Command::Debate => {
            let ds = dataset(&cfg)?;
            let run = stage_run(&cfg)?;
            let gw = pipeline::build_gateway(&cfg.gateway, &cfg.paths.out.join("cache"))?;
            let items: Vec<&NewsItem> = ds.items.iter().collect();
            report_summary("debate", pipeline::cmd_debate(&run, &items, &gw)?);
        }
        Command::Synthesize => {
            let ds = dataset(&cfg)?;
            let run = stage_run(&cfg)?;
            let gw = pipeline::build_gateway(&cfg.gateway, &cfg.paths.out.join("cache"))?;
            let items: Vec<&NewsItem> = ds.items.iter().collect();
            report_summary("synthesize", pipeline::cmd_synthesize(&run, &items, &gw)?);
        }
        Command::Encode { no_debate } => {
            let ds = dataset(&cfg)?;
            let run = stage_run(&cfg)?;
            let provider = pipeline::build_provider(&cfg.embedding, &run.embeddings_dir())?;
            let items: Vec<&NewsItem> = ds.items.iter().collect();
            report_summary("encode", pipeline::cmd_encode(&run, &items, &provider, no_debate)?);
        }
        Command::Train {
            no_debate,
            freeze_roles,
        } => {
            let ds = dataset(&cfg)?;
            let run = stage_run(&cfg)?;
            let provider = pipeline::build_provider(&cfg.embedding, &run.embeddings_dir())?;
            let opts = TrainOptions {
                news_only: no_debate,
                freeze_zero_roles: freeze_roles,
            };
            let report = pipeline::cmd_train(&run, &ds, &provider, opts)?;
            if let Some(last) = report.loss_history.last() {
                println!("trained {} epochs, final loss {last:.6}", report.loss_history.len());
            }
            println!("checkpoint: {}", run.checkpoint_path().display());
        }
        Command::Predict { no_debate } => {
            let ds = dataset(&cfg)?;
            let run = stage_run(&cfg)?;
            let provider = pipeline::build_provider(&cfg.embedding, &run.embeddings_dir())?;
            let records = pipeline::cmd_predict(&run, &ds, &provider, no_debate)?;
            println!("{} predictions -> {}", records.len(), run.predictions_path().display());
        }
        Command::Evaluate => {
            let run = stage_run(&cfg)?;
            print!("{}", pipeline::cmd_evaluate(&run)?.to_text());
        }
        Command::Pipeline => {
            let ds = dataset(&cfg)?;
            let out = pipeline::cmd_pipeline(&cfg, &ds)?;
            print!("{}", out.metrics.to_text());
            println!("run: {}", out.run_root.display());
        }
        Command::Ablate { variants } => {
            for v in &variants {
                v.parse::<Variant>()?;
            }
            let ds = dataset(&cfg)?;
            let run = Run::create(&cfg)?;
            let gw = pipeline::build_gateway(&cfg.gateway, &cfg.paths.out.join("cache"))?;
            let rows = pipeline::run_ablation(&run, &ds, &gw, &variants)?;
            print!("{}", pipeline::ablation_table(&rows));
            println!("run: {}", run.root.display());
        }
        Command::Synthetic {
            train,
            val,
            test,
            variant,
        } => {
            let variant = match variant.as_str() {
                "planted" => SyntheticVariant::Planted,
                _ => SyntheticVariant::RoleDependent,
            };
            let run = stage_run(&cfg)?;
            let items = generate_synthetic(&SyntheticConfig {
                train,
                val,
                test,
                seed: cfg.seed,
                variant,
            });
            let ds = pipeline::install_synthetic(&run, &items)?;
            let path = run.root.join("dataset.jsonl");
            write_dataset(&path, &ds.items).with_context(|| format!("writing {}", path.display()))?;
            let n_train = ds.split(Split::Train).count();
            println!("{} items ({n_train} train) -> {}", ds.items.len(), path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
