//! End-to-end tests of the `glidecast` binary: exit codes, artifact
//! layout, sidecar metadata, and byte-level determinism across runs.

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glidecast::config::RunConfig;
use glidecast::io::{read_meta, read_metrics_json};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_glidecast"))
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn glidecast")
}

fn assert_status(out: &Output, expected: i32, context: &str) {
    let code = out.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "{context}: exit {code}, stdout: {}, stderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// A fast config: 20 s flight, short windows, two epochs.
const FAST_CONFIG: &str = r#"{
  "sim": {"t_total": 20.0},
  "dataset": {"sequence_length": 5},
  "training": {"epochs": 2}
}"#;

fn write_fast_config(dir: &Path) -> PathBuf {
    let path = dir.join("run.json");
    std::fs::write(&path, FAST_CONFIG).expect("write config");
    path
}

#[test]
fn help_and_version_exit_zero() {
    let out = bin().arg("--help").output().expect("spawn");
    assert_status(&out, 0, "--help");
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "simulate",
        "make-dataset",
        "train",
        "evaluate",
        "rollout",
        "plot-data",
    ] {
        assert!(text.contains(cmd), "help is missing {cmd}");
    }

    let out = bin().arg("--version").output().expect("spawn");
    assert_status(&out, 0, "--version");

    let out = bin().args(["simulate", "--help"]).output().expect("spawn");
    assert_status(&out, 0, "simulate --help");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().expect("tempdir");

    // Unknown flag and missing subcommand are argument errors.
    let out = run_in(dir.path(), &["simulate", "--frobnicate"]);
    assert_status(&out, 2, "unknown flag");
    let out = bin().output().expect("spawn");
    assert_status(&out, 2, "no subcommand");

    // Missing required --models.
    let out = run_in(dir.path(), &["evaluate", "--allow-defaults"]);
    assert_status(&out, 2, "missing --models");

    // No config and no --allow-defaults.
    let out = run_in(dir.path(), &["simulate"]);
    assert_status(&out, 2, "config required");

    // Unknown config key.
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"sim": {"dt_seconds": 0.1}}"#).expect("write");
    let out = run_in(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_status(&out, 2, "unknown config key");

    // Out-of-domain config value.
    std::fs::write(&cfg, r#"{"sim": {"dt": -0.5}}"#).expect("write");
    let out = run_in(dir.path(), &["simulate", "--config", cfg.to_str().unwrap()]);
    assert_status(&out, 2, "invalid config value");
}

#[test]
fn simulate_with_defaults_writes_canonical_trajectory() {
    let dir = tempfile::tempdir().expect("tempdir");
    let out = run_in(dir.path(), &["simulate", "--allow-defaults"]);
    assert_status(&out, 0, "simulate");

    let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).expect("read");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines[1], "0,0,0,80000");
    assert!(lines.len() - 1 <= 3001, "row count {}", lines.len() - 1);

    let meta = read_meta(&dir.path().join("trajectory.csv.meta.json")).expect("meta");
    assert_eq!(meta.command, "simulate");
    assert_eq!(meta.samples, Some(lines.len() - 1));
    assert!(meta.termination.is_some());
    assert_eq!(meta.config_echo, RunConfig::default());
}

#[test]
fn full_artifact_pipeline_round_trip() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(dir.path());
    let cfg_arg = cfg.to_str().unwrap();

    // simulate -> trajectory.csv
    let out = run_in(dir.path(), &["simulate", "--config", cfg_arg]);
    assert_status(&out, 0, "simulate");
    let traj_path = dir.path().join("trajectory.csv");
    let rows = std::fs::read_to_string(&traj_path)
        .expect("read")
        .lines()
        .count()
        - 1;
    assert_eq!(rows, 201, "20 s at 0.1 s steps plus release");

    // make-dataset -> dataset.csv
    let out = run_in(
        dir.path(),
        &[
            "make-dataset",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
        ],
    );
    assert_status(&out, 0, "make-dataset");
    let dataset = std::fs::read_to_string(dir.path().join("dataset.csv")).expect("read");
    assert!(dataset.starts_with("window_index,step,xn,yn,zn,target_axis,target_value\n"));
    // 201 samples, L=5 -> 196 windows, each 5 input rows + 3 target rows.
    assert_eq!(dataset.lines().count(), 1 + 196 * 8);

    // train -> models dir
    let out = run_in(
        dir.path(),
        &[
            "train",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
            "--out",
            "models",
        ],
    );
    assert_status(&out, 0, "train");
    for name in [
        "model_x.json",
        "model_y.json",
        "model_z.json",
        "history.csv",
        "train.meta.json",
    ] {
        assert!(
            dir.path().join("models").join(name).exists(),
            "missing {name}"
        );
    }
    let history = std::fs::read_to_string(dir.path().join("models/history.csv")).expect("read");
    let lines: Vec<&str> = history.lines().collect();
    assert_eq!(lines[0], "epoch,axis,loss,mae");
    assert_eq!(lines.len(), 1 + 2 * 3, "2 epochs x 3 axes");
    assert!(lines[1].starts_with("1,x,"));
    assert!(lines[2].starts_with("1,y,"));

    // evaluate -> metrics.json
    let out = run_in(
        dir.path(),
        &[
            "evaluate",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
            "--models",
            "models",
        ],
    );
    assert_status(&out, 0, "evaluate");
    let metrics = read_metrics_json(&dir.path().join("metrics.json")).expect("metrics");
    assert!(metrics.rmse >= metrics.mae, "rmse must dominate mae");
    assert!(metrics.per_axis.contains_key("x"));
    assert!(metrics.per_axis.contains_key("y"));
    assert!(metrics.per_axis.contains_key("z"));
    // The y channel is degenerate in planar flight: exact zeros.
    assert_eq!(metrics.per_axis["y"].rmse, 0.0);
    // Config echo reproduces the parsed document byte-for-byte.
    let parsed: RunConfig = serde_json::from_str(FAST_CONFIG).expect("parse");
    assert_eq!(
        serde_json::to_string(&metrics.config_echo).unwrap(),
        serde_json::to_string(&parsed).unwrap()
    );

    // rollout -> rollout.csv continuing the timeline
    let out = run_in(
        dir.path(),
        &[
            "rollout",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
            "--models",
            "models",
            "--steps",
            "7",
        ],
    );
    assert_status(&out, 0, "rollout");
    let rollout = std::fs::read_to_string(dir.path().join("rollout.csv")).expect("read");
    let lines: Vec<&str> = rollout.lines().collect();
    assert_eq!(lines[0], "t,x,y,z");
    assert_eq!(lines.len(), 8, "7 forecast rows");
    let first_t: f64 = lines[1].split(',').next().unwrap().parse().unwrap();
    assert!(
        (first_t - 20.1).abs() < 1e-9,
        "forecast starts one step past the end"
    );

    // plot-data -> plot.csv aligned to every window
    let out = run_in(
        dir.path(),
        &[
            "plot-data",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
            "--models",
            "models",
        ],
    );
    assert_status(&out, 0, "plot-data");
    let plot = std::fs::read_to_string(dir.path().join("plot.csv")).expect("read");
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "t,x,y,z,x_pred,y_pred,z_pred");
    assert_eq!(lines.len(), 1 + 196, "one row per window");

    // Sidecars exist for every CSV artifact.
    for name in [
        "trajectory.csv.meta.json",
        "dataset.csv.meta.json",
        "rollout.csv.meta.json",
        "plot.csv.meta.json",
    ] {
        assert!(dir.path().join(name).exists(), "missing sidecar {name}");
    }
}

#[test]
fn omitting_trajectory_simulates_identically() {
    // Because the trajectory CSV round-trips bit-exactly, training from
    // the file and training from a fresh in-memory simulation must
    // produce identical models.
    let from_file = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(from_file.path());
    let cfg_arg = cfg.to_str().unwrap();
    let out = run_in(from_file.path(), &["simulate", "--config", cfg_arg]);
    assert_status(&out, 0, "simulate");
    let out = run_in(
        from_file.path(),
        &[
            "train",
            "--config",
            cfg_arg,
            "--trajectory",
            "trajectory.csv",
        ],
    );
    assert_status(&out, 0, "train from file");

    let in_memory = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(in_memory.path());
    let out = run_in(
        in_memory.path(),
        &["train", "--config", cfg.to_str().unwrap()],
    );
    assert_status(&out, 0, "train in memory");

    for name in [
        "model_x.json",
        "model_y.json",
        "model_z.json",
        "history.csv",
    ] {
        let a = std::fs::read(from_file.path().join("models").join(name)).expect("read");
        let b = std::fs::read(in_memory.path().join("models").join(name)).expect("read");
        assert_eq!(a, b, "{name} differs between the two routes");
    }
}

#[test]
fn identical_runs_are_byte_identical() {
    let run = || {
        let dir = tempfile::tempdir().expect("tempdir");
        let cfg = write_fast_config(dir.path());
        let cfg_arg = cfg.to_str().unwrap().to_string();
        for args in [
            vec!["simulate", "--config", &cfg_arg],
            vec![
                "train",
                "--config",
                &cfg_arg,
                "--trajectory",
                "trajectory.csv",
            ],
            vec![
                "evaluate",
                "--config",
                &cfg_arg,
                "--trajectory",
                "trajectory.csv",
                "--models",
                "models",
            ],
        ] {
            let out = run_in(dir.path(), &args.iter().map(|s| &**s).collect::<Vec<_>>());
            assert_status(&out, 0, args[0]);
        }
        dir
    };
    let a = run();
    let b = run();
    for name in [
        "trajectory.csv",
        "metrics.json",
        "models/model_x.json",
        "models/model_y.json",
        "models/model_z.json",
        "models/history.csv",
    ] {
        let bytes_a = std::fs::read(a.path().join(name)).expect("read");
        let bytes_b = std::fs::read(b.path().join(name)).expect("read");
        assert_eq!(bytes_a, bytes_b, "{name} is not reproducible");
    }
}

#[test]
fn seed_override_changes_models() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(dir.path());
    let cfg_arg = cfg.to_str().unwrap();
    let out = run_in(
        dir.path(),
        &["train", "--config", cfg_arg, "--out", "models_a"],
    );
    assert_status(&out, 0, "train default seeds");
    let out = run_in(
        dir.path(),
        &[
            "train", "--config", cfg_arg, "--seed", "7", "--out", "models_b",
        ],
    );
    assert_status(&out, 0, "train seed 7");
    let a = std::fs::read(dir.path().join("models_a/model_x.json")).expect("read");
    let b = std::fs::read(dir.path().join("models_b/model_x.json")).expect("read");
    assert_ne!(a, b, "seed override must change initialization");
}

#[test]
fn runtime_failures_exit_one() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(dir.path());
    let cfg_arg = cfg.to_str().unwrap();

    // Missing trajectory file.
    let out = run_in(
        dir.path(),
        &[
            "make-dataset",
            "--config",
            cfg_arg,
            "--trajectory",
            "absent.csv",
        ],
    );
    assert_status(&out, 1, "missing trajectory");

    // Malformed trajectory file.
    std::fs::write(dir.path().join("broken.csv"), "not,a,trajectory\n1,2,3\n").expect("write");
    let out = run_in(
        dir.path(),
        &[
            "make-dataset",
            "--config",
            cfg_arg,
            "--trajectory",
            "broken.csv",
        ],
    );
    assert_status(&out, 1, "malformed trajectory");

    // Missing models directory.
    let out = run_in(
        dir.path(),
        &["evaluate", "--config", cfg_arg, "--models", "no_such_dir"],
    );
    assert_status(&out, 1, "missing models");

    // Corrupt model file.
    let out = run_in(dir.path(), &["train", "--config", cfg_arg]);
    assert_status(&out, 0, "train");
    let model_x = dir.path().join("models/model_x.json");
    let text = std::fs::read_to_string(&model_x).expect("read");
    std::fs::write(&model_x, &text[..text.len() / 2]).expect("write");
    let out = run_in(
        dir.path(),
        &["evaluate", "--config", cfg_arg, "--models", "models"],
    );
    assert_status(&out, 1, "corrupt model");
}

#[test]
fn sequence_length_mismatch_is_a_usage_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let cfg = write_fast_config(dir.path());
    let cfg_arg = cfg.to_str().unwrap();
    let out = run_in(dir.path(), &["train", "--config", cfg_arg]);
    assert_status(&out, 0, "train");

    // Evaluate with a conflicting window length in the config.
    let other = dir.path().join("other.json");
    std::fs::write(
        &other,
        r#"{"sim": {"t_total": 20.0}, "dataset": {"sequence_length": 7}}"#,
    )
    .expect("write");
    let out = run_in(
        dir.path(),
        &[
            "evaluate",
            "--config",
            other.to_str().unwrap(),
            "--models",
            "models",
        ],
    );
    assert_status(&out, 2, "sequence length mismatch");
}
