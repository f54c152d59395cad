//! Command-line interface: argument parsing and command dispatch.
//!
//! Six subcommands cover the full workflow:
//!
//! | command        | reads                    | writes                          |
//! |----------------|--------------------------|---------------------------------|
//! | `simulate`     | config                   | trajectory CSV                  |
//! | `make-dataset` | config, trajectory CSV   | normalized dataset CSV          |
//! | `train`        | config, trajectory CSV   | model JSONs + history CSV       |
//! | `evaluate`     | config, trajectory, models | metrics JSON                  |
//! | `rollout`      | config, trajectory, models | predicted-trajectory CSV      |
//! | `plot-data`    | config, trajectory, models | merged actual/predicted CSV   |
//!
//! Wherever `--trajectory` is optional, omitting it simulates a fresh
//! trajectory from the config; because the CSV round-trips bit-exactly,
//! both routes produce identical downstream artifacts. Every CSV artifact
//! gets a `.meta.json` sidecar carrying the full configuration echo.
//!
//! Exit codes: 0 on success, 2 for usage errors (bad flags, bad config),
//! 1 for runtime failures (missing inputs, corrupt files, numeric
//! breakdown).

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, RunConfig};
use crate::dataset::{chronological_split, make_windows, prepare};
use crate::error::{Error, Result};
use crate::io::{
    meta_path, read_trajectory_csv, write_dataset_csv, write_history_csv, write_meta,
    write_metrics_json, write_plot_csv, write_trajectory_csv, PlotRow, RunMeta,
};
use crate::model::{build_axis_set, load_model, predict_next, rollout, save_model};
use crate::nn::tensor::Tensor;
use crate::sim::{simulate, Trajectory, TrajectorySample};
use crate::training::{evaluate, train};

/// Glide-vehicle trajectory forecasting: physics simulation plus
/// per-axis hybrid CNN-LSTM-GRU next-position models.
#[derive(Debug, Parser)]
#[command(name = "glidecast", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run configuration JSON document.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Override every seed: models get N, N+1, N+2; shuffling gets N+3.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,

    /// Output path (a directory for `train`, a file otherwise).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Run with built-in defaults when no config file is available.
    #[arg(long)]
    pub allow_defaults: bool,
}

/// All subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a flight and write the trajectory CSV.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Window a trajectory into the normalized dataset CSV.
    MakeDataset {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trajectory CSV; omitted, a fresh simulation is used.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
    },
    /// Train the three axis models and save them with their history.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trajectory CSV; omitted, a fresh simulation is used.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
    },
    /// Evaluate saved models on the chronological test split.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trajectory CSV; omitted, a fresh simulation is used.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
        /// Directory holding model_x.json, model_y.json, model_z.json.
        #[arg(long, value_name = "DIR")]
        models: PathBuf,
    },
    /// Forecast past the end of a trajectory autoregressively.
    Rollout {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trajectory CSV; omitted, a fresh simulation is used.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
        /// Directory holding model_x.json, model_y.json, model_z.json.
        #[arg(long, value_name = "DIR")]
        models: PathBuf,
        /// Number of autoregressive steps to forecast.
        #[arg(long, value_name = "N", default_value_t = 100)]
        steps: usize,
    },
    /// Write aligned actual/predicted positions for external plotting.
    PlotData {
        #[command(flatten)]
        common: CommonArgs,
        /// Input trajectory CSV; omitted, a fresh simulation is used.
        #[arg(long, value_name = "PATH")]
        trajectory: Option<PathBuf>,
        /// Directory holding model_x.json, model_y.json, model_z.json.
        #[arg(long, value_name = "DIR")]
        models: PathBuf,
    },
}

/// Parses arguments from the process environment and runs the command,
/// returning the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads the config for a command, applying the seed override.
fn load_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = parse_config(common.config.as_deref(), common.allow_defaults)?;
    if let Some(seed) = common.seed {
        cfg.apply_seed_override(seed);
    }
    Ok(cfg)
}

/// Reads the given trajectory CSV, or simulates one from the config.
fn load_or_simulate(cfg: &RunConfig, trajectory: Option<&Path>) -> Result<Trajectory> {
    match trajectory {
        Some(path) => read_trajectory_csv(path),
        None => simulate(&cfg.to_sim_config(), &cfg.constants),
    }
}

/// Checks that the config's window length matches loaded models; the
/// config echo written next to an artifact must reproduce it.
fn check_sequence_length(cfg: &RunConfig, models_l: usize) -> Result<()> {
    if cfg.dataset.sequence_length != models_l {
        return Err(Error::Config(format!(
            "dataset.sequence_length is {}, but the loaded models expect windows of length \
             {models_l}; align the config with the models",
            cfg.dataset.sequence_length
        )));
    }
    Ok(())
}

/// Runs one parsed subcommand to completion.
pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { common } => {
            let cfg = load_config(&common)?;
            let traj = simulate(&cfg.to_sim_config(), &cfg.constants)?;
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
            write_trajectory_csv(&traj.samples, &out)?;
            write_meta(
                &RunMeta {
                    command: "simulate".into(),
                    termination: Some(traj.termination),
                    samples: Some(traj.len()),
                    config_echo: cfg,
                },
                &meta_path(&out),
            )?;
            println!(
                "wrote {} ({} samples, termination: {})",
                out.display(),
                traj.len(),
                traj.termination
            );
            Ok(())
        }

        Command::MakeDataset { common, trajectory } => {
            let cfg = load_config(&common)?;
            let traj = load_or_simulate(&cfg, trajectory.as_deref())?;
            let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec())?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("dataset.csv"));
            write_dataset_csv(&data, &out)?;
            write_meta(
                &RunMeta {
                    command: "make-dataset".into(),
                    termination: None,
                    samples: None,
                    config_echo: cfg,
                },
                &meta_path(&out),
            )?;
            println!(
                "wrote {} ({} training windows, {} test windows)",
                out.display(),
                data.train.inputs.len(),
                data.test.inputs.len()
            );
            Ok(())
        }

        Command::Train { common, trajectory } => {
            let cfg = load_config(&common)?;
            let traj = load_or_simulate(&cfg, trajectory.as_deref())?;
            let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec())?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("models"));
            println!(
                "training 3 axis models: {} windows, {} epochs, batch size {}",
                data.train.inputs.len(),
                cfg.training.epochs,
                cfg.training.batch_size
            );
            let started = Instant::now();
            let mut set = build_axis_set(
                cfg.dataset.sequence_length,
                cfg.model_seeds(),
                data.normalizer.clone(),
            )?;
            let history = train(&mut set, &data.train, &cfg.to_train_config())?;
            save_model(&set, &out)?;
            write_history_csv(&history, &out.join("history.csv"))?;
            write_meta(
                &RunMeta {
                    command: "train".into(),
                    termination: None,
                    samples: None,
                    config_echo: cfg,
                },
                &out.join("train.meta.json"),
            )?;
            if let Some(last) = history.last() {
                println!(
                    "wrote {} (final epoch {} done in {:.1} s)",
                    out.display(),
                    last.epoch,
                    started.elapsed().as_secs_f64()
                );
            } else {
                println!("wrote {} (no epochs trained)", out.display());
            }
            Ok(())
        }

        Command::Evaluate {
            common,
            trajectory,
            models,
        } => {
            let cfg = load_config(&common)?;
            let set = load_model(&models)?;
            check_sequence_length(&cfg, set.sequence_length)?;
            let traj = load_or_simulate(&cfg, trajectory.as_deref())?;
            let windows = make_windows(&traj, set.sequence_length)?;
            let (_, test_raw) = chronological_split(&windows, &cfg.split_spec())?;
            let report = evaluate(&set, &test_raw)?;
            let out = common.out.unwrap_or_else(|| PathBuf::from("metrics.json"));
            write_metrics_json(&report, &cfg, &out)?;
            println!(
                "wrote {} (rmse {:.2} m, mae {:.2} m, mape {:.3} %)",
                out.display(),
                report.pooled.rmse,
                report.pooled.mae,
                report.pooled.mape_percent
            );
            Ok(())
        }

        Command::Rollout {
            common,
            trajectory,
            models,
            steps,
        } => {
            let cfg = load_config(&common)?;
            let set = load_model(&models)?;
            check_sequence_length(&cfg, set.sequence_length)?;
            let traj = load_or_simulate(&cfg, trajectory.as_deref())?;
            let l = set.sequence_length;
            if traj.len() < l {
                return Err(Error::InsufficientData(format!(
                    "rollout needs a seed window of {l} samples, trajectory has {}",
                    traj.len()
                )));
            }
            let tail = &traj.samples[traj.len() - l..];
            let mut window = Tensor::zeros(&[l, 3]);
            for (row, s) in tail.iter().enumerate() {
                window.set2(row, 0, s.x);
                window.set2(row, 1, s.y);
                window.set2(row, 2, s.z);
            }
            let t_last = tail.last().expect("non-empty tail").t;
            let predictions = rollout(&set, &window, steps)?;
            let samples: Vec<TrajectorySample> = predictions
                .iter()
                .enumerate()
                .map(|(k, &(x, y, z))| TrajectorySample {
                    t: t_last + (k + 1) as f64 * cfg.sim.dt,
                    x,
                    y,
                    z,
                })
                .collect();
            let out = common.out.unwrap_or_else(|| PathBuf::from("rollout.csv"));
            write_trajectory_csv(&samples, &out)?;
            write_meta(
                &RunMeta {
                    command: "rollout".into(),
                    termination: None,
                    samples: Some(samples.len()),
                    config_echo: cfg,
                },
                &meta_path(&out),
            )?;
            println!(
                "wrote {} ({} forecast steps from t = {} s)",
                out.display(),
                steps,
                t_last
            );
            Ok(())
        }

        Command::PlotData {
            common,
            trajectory,
            models,
        } => {
            let cfg = load_config(&common)?;
            let set = load_model(&models)?;
            check_sequence_length(&cfg, set.sequence_length)?;
            let traj = load_or_simulate(&cfg, trajectory.as_deref())?;
            let windows = make_windows(&traj, set.sequence_length)?;
            let l = set.sequence_length;
            let mut rows = Vec::with_capacity(windows.inputs.len());
            for (i, window) in windows.inputs.iter().enumerate() {
                let (x_pred, y_pred, z_pred) = predict_next(&set, window)?;
                let actual = traj.samples[i + l];
                rows.push(PlotRow {
                    t: actual.t,
                    x: actual.x,
                    y: actual.y,
                    z: actual.z,
                    x_pred,
                    y_pred,
                    z_pred,
                });
            }
            let out = common.out.unwrap_or_else(|| PathBuf::from("plot.csv"));
            write_plot_csv(&rows, &out)?;
            write_meta(
                &RunMeta {
                    command: "plot-data".into(),
                    termination: None,
                    samples: Some(rows.len()),
                    config_echo: cfg,
                },
                &meta_path(&out),
            )?;
            println!("wrote {} ({} aligned rows)", out.display(), rows.len());
            Ok(())
        }
    }
}
