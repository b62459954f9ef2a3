use std::collections::BTreeSet;

use veridebate_core::evaluation::{generate_synthetic, parse_dataset, LoadOptions, SyntheticConfig};
use veridebate_core::gateway::Gateway;
use veridebate_core::neural::ModelConfig;
use veridebate_core::pipeline::*;
use veridebate_core::{Error, NewsItem, Split};

fn small_config(out: &std::path::Path, run_id: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.embedding.dim = 16;
    cfg.model = ModelConfig {
        role_dim: 4,
        gat_hidden: 8,
        proj_dim: 8,
        heads: 2,
        ..Default::default()
    };
    cfg.train.epochs = 3;
    cfg.paths.out = out.to_path_buf();
    cfg.paths.run_id = Some(run_id.into());
    cfg.gateway.limits.cache = false;
    cfg.resolved()
}

fn three_items() -> Vec<NewsItem> {
    [
        ("a", "Harbor authority confirms ferry schedule changes for winter."),
        ("b", "Miracle fruit cures every disease overnight, doctors stunned."),
        ("c", "University library extends weekend opening hours."),
    ]
    .iter()
    .map(|(id, text)| NewsItem::new(*id, *text).unwrap())
    .collect()
}

#[test]
fn debate_writes_one_transcript_per_item_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), "r");
    let run = Run::create(&cfg).unwrap();
    let items = three_items();
    let refs: Vec<&NewsItem> = items.iter().collect();
    let gw = Gateway::mock();
    let s = cmd_debate(&run, &refs, &gw).unwrap();
    assert_eq!((s.processed, s.skipped, s.failed), (3, 0, 0));
    let names: BTreeSet<String> = std::fs::read_dir(run.transcripts_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, BTreeSet::from(["a.json".into(), "b.json".into(), "c.json".into()]));
    let first = std::fs::read(run.transcript_path("b")).unwrap();

    let gw2 = Gateway::mock();
    let s = cmd_debate(&run, &refs, &gw2).unwrap();
    assert_eq!((s.processed, s.skipped), (0, 3));
    assert_eq!(gw2.backend_calls(), 0);

    // A fresh workspace reproduces the same bytes.
    let other = Run::create(&small_config(dir.path(), "r2")).unwrap();
    cmd_debate(&other, &refs, &Gateway::mock()).unwrap();
    assert_eq!(std::fs::read(other.transcript_path("b")).unwrap(), first);
}

#[test]
fn unwritable_workspace_is_a_startup_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let cfg = small_config(&blocker, "r");
    assert!(matches!(Run::create(&cfg), Err(Error::Io { .. })));
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = small_config(std::path::Path::new("/tmp/x"), "id");
    let text = cfg.to_toml();
    assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
    let partial = PipelineConfig::from_toml_str("seed = 9\n[embedding]\ndim = 24\n[gateway]\nmax_concurrency = 2\n").unwrap();
    assert_eq!(partial.train.seed, 9);
    assert_eq!(partial.debate.generation.seed, 9);
    assert_eq!(partial.model.embed_dim, 24);
    assert_eq!(partial.gateway.limits.max_concurrency, 2);
    assert!(PipelineConfig::from_toml_str("seed = \"x\"").is_err());
}

#[test]
fn pipeline_is_deterministic_and_bundles_explanations() {
    let dir = tempfile::tempdir().unwrap();
    let items = generate_synthetic(&SyntheticConfig {
        train: 24,
        val: 6,
        test: 10,
        ..Default::default()
    });
    let mut outputs = Vec::new();
    for id in ["one", "two"] {
        let cfg = small_config(dir.path(), id);
        let run = Run::create(&cfg).unwrap();
        let ds = install_synthetic(&run, &items).unwrap();
        let out = run_variant(&run, &ds, &Gateway::mock(), Variant::Full).unwrap();
        assert!((0.0..=1.0).contains(&out.metrics.macro_f1));
        outputs.push(std::fs::read(run.metrics_json_path()).unwrap());
        let explanations = std::fs::read_to_string(run.explanations_path()).unwrap();
        assert_eq!(explanations.lines().count(), 10);
        let first: serde_json::Value = serde_json::from_str(explanations.lines().next().unwrap()).unwrap();
        let report = first["report"].as_str().unwrap();
        assert!(run.root.join(report).exists());
        assert!(run.root.join(first["transcript"].as_str().unwrap()).exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    let json: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert!(json["macro_f1"].is_number());
}

#[test]
fn cmd_pipeline_runs_debates_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let text = three_items()
        .iter()
        .zip(["train", "train", "test"])
        .zip(["real", "fake", "real"])
        .map(|((it, split), label)| {
            serde_json::json!({"id": it.id, "content": it.content, "label": label, "split": split}).to_string()
        })
        .collect::<Vec<_>>()
        .join("\n");
    let ds = parse_dataset(&text, &LoadOptions::default()).unwrap();
    let out = cmd_pipeline(&small_config(dir.path(), "e2e"), &ds).unwrap();
    assert_eq!(out.metrics.n, 1);
    assert_eq!(out.debate.unwrap().processed, 3);
    assert!(out.run_root.join("model.ckpt").exists());
    assert!(out.run_root.join("metrics.txt").exists());
}

#[test]
fn missing_train_split() {
    let dir = tempfile::tempdir().unwrap();
    let items: Vec<NewsItem> = three_items()
        .into_iter()
        .map(|i| i.with_split(Split::Test).with_label(veridebate_core::Label::Real))
        .collect();
    let ds = veridebate_core::evaluation::Dataset {
        items,
        language: Default::default(),
    };
    let err = cmd_pipeline(&small_config(dir.path(), "m"), &ds).unwrap_err();
    assert_eq!(err.to_string(), "no training items");
}

#[test]
fn no_debate_never_calls_the_gateway() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::create(&small_config(dir.path(), "nd")).unwrap();
    let item = NewsItem::new("solo", "Regional airline adds two routes.")
        .unwrap()
        .with_label(veridebate_core::Label::Real)
        .with_split(Split::Train);
    let ds = veridebate_core::evaluation::Dataset {
        items: vec![item],
        language: Default::default(),
    };
    let gw = Gateway::mock();
    let err = run_variant(&run, &ds, &gw, Variant::NoDebate).unwrap_err();
    // Training succeeds on the single item; only scoring lacks a test split.
    assert!(err.to_string().contains("predict"), "{err}");
    assert!(run.checkpoint_path().exists());
    assert_eq!(gw.backend_calls(), 0);
}

#[test]
fn unknown_variant_is_rejected_up_front() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::create(&small_config(dir.path(), "u")).unwrap();
    let ds = veridebate_core::evaluation::Dataset {
        items: three_items(),
        language: Default::default(),
    };
    let gw = Gateway::mock();
    let err = run_ablation(&run, &ds, &gw, &["full".into(), "no_magic".into()]).unwrap_err();
    assert!(err.to_string().contains("no_magic"));
    assert_eq!(gw.backend_calls(), 0);
}
