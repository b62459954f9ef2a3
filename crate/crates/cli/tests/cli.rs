use std::path::Path;
use std::process::{Command, Output};

fn veridebate(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_veridebate"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(
        &path,
        "seed = 3\n\n[embedding]\ndim = 16\n\n[model]\nrole_dim = 4\ngat_hidden = 8\nproj_dim = 8\nheads = 2\n\n[train]\nepochs = 2\n\n[gateway]\ncache = false\n",
    )
    .unwrap();
    path
}

fn write_dataset(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("news.jsonl");
    let lines = [
        r#"{"id":"n1","content":"Port authority confirms new ferry timetable for the winter season.","label":"real","split":"train"}"#,
        r#"{"id":"n2","content":"Secret miracle fruit reverses ageing overnight, experts baffled.","label":"fake","split":"train"}"#,
        r#"{"id":"n3","content":"City library extends weekend opening hours after survey.","label":0,"split":"test"}"#,
        r#"{"id":"n4","content":"Celebrity reveals moon landing was staged in a garage.","label":1,"split":"test"}"#,
    ];
    std::fs::write(&path, lines.join("\n")).unwrap();
    path
}

#[test]
fn pipeline_command_writes_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let ds = write_dataset(dir.path());
    let out = veridebate(
        &[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--dataset",
            ds.to_str().unwrap(),
            "--out",
            "runs",
            "--run-id",
            "p1",
            "--backend",
            "mock",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("macF1"), "{stdout}");
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("runs/p1/metrics.json")).unwrap()).unwrap();
    let f1 = metrics["macro_f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&f1));
    let saved = std::fs::read_to_string(dir.path().join("runs/p1/config.toml")).unwrap();
    assert!(saved.contains("seed = 3"));
}

#[test]
fn stage_commands_share_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let ds = write_dataset(dir.path());
    let common = ["--config", cfg.to_str().unwrap(), "--dataset", ds.to_str().unwrap(), "--run-id", "s"];
    for stage in ["debate", "synthesize", "encode", "train", "predict", "evaluate"] {
        let mut args = vec![stage];
        args.extend_from_slice(&common);
        let out = veridebate(&args, dir.path());
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let run = dir.path().join("runs/s");
    assert_eq!(std::fs::read_dir(run.join("transcripts")).unwrap().count(), 4);
    assert_eq!(std::fs::read_dir(run.join("reports")).unwrap().count(), 4);
    assert!(run.join("metrics.txt").exists());

    let mut args = vec!["debate"];
    args.extend_from_slice(&common);
    let again = veridebate(&args, dir.path());
    assert!(String::from_utf8_lossy(&again.stdout).contains("0 processed, 4 skipped"));
}

#[test]
fn flags_override_config_and_errors_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let ds = write_dataset(dir.path());

    let out = veridebate(&["debate", "--dataset", ds.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--run-id"));

    let out = veridebate(
        &["ablate", "--dataset", ds.to_str().unwrap(), "--variants", "full,no_magic"],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_magic"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\":\"x\"}\n").unwrap();
    let out = veridebate(&["pipeline", "--dataset", bad.to_str().unwrap(), "--strict"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let out = veridebate(
        &[
            "pipeline",
            "--config",
            cfg.to_str().unwrap(),
            "--dataset",
            ds.to_str().unwrap(),
            "--run-id",
            "seed9",
            "--seed",
            "9",
            "--interaction-mode",
            "pooled",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let saved = std::fs::read_to_string(dir.path().join("runs/seed9/config.toml")).unwrap();
    assert!(saved.contains("seed = 9"));
    assert!(saved.contains("interaction_mode = \"pooled\""));
}

#[test]
fn synthetic_then_ablate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let c = cfg.to_str().unwrap();
    let out = veridebate(
        &["synthetic", "--config", c, "--run-id", "syn", "--train", "12", "--test", "6"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ds = dir.path().join("runs/syn/dataset.jsonl");
    assert_eq!(std::fs::read_to_string(&ds).unwrap().lines().count(), 18);
    let out = veridebate(
        &[
            "ablate",
            "--config",
            c,
            "--run-id",
            "syn",
            "--dataset",
            ds.to_str().unwrap(),
            "--variants",
            "full,no_analysis",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("no_analysis") && table.contains("full"));
}
