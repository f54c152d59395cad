//! Train the three per-axis models on a short flight and score them on
//! the held-out tail of the trajectory.
//!
//! A reduced configuration (60 s horizon, 8 epochs) keeps the run quick
//! while still showing the full loop: per-epoch loss/MAE history for each
//! axis, then RMSE/MAE/MAPE in meters on the chronologically held-out
//! test windows. The planar flight leaves `y` constant, so its model is
//! bypassed by the degenerate-channel guard and scores exactly zero.
//!
//! ```text
//! cargo run --release --example train_and_evaluate
//! ```

use glidecast::config::RunConfig;
use glidecast::dataset::{prepare, Axis};
use glidecast::model::build_axis_set;
use glidecast::sim::simulate;
use glidecast::training::{evaluate, train};

fn main() -> glidecast::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.sim.t_total = 60.0;
    cfg.training.epochs = 8;
    cfg.validate()?;

    let traj = simulate(&cfg.to_sim_config(), &cfg.constants)?;
    let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec())?;
    println!(
        "trajectory: {} samples; dataset: {} train / {} test pairs",
        traj.samples.len(),
        data.train.len(),
        data.test.len()
    );

    let mut set = build_axis_set(
        cfg.dataset.sequence_length,
        cfg.model_seeds(),
        data.normalizer.clone(),
    )?;
    let history = train(&mut set, &data.train, &cfg.to_train_config())?;

    println!("\nepoch   axis        loss          mae");
    for record in &history {
        if record.epoch == 1 || record.epoch % 4 == 0 {
            println!(
                "{:>5}   {:<4} {:>12.3e} {:>12.3e}",
                record.epoch, record.axis, record.loss, record.mae
            );
        }
    }

    let report = evaluate(&set, &data.test_raw)?;
    println!("\ntest metrics (meters):");
    println!("{:<6} {:>12} {:>12} {:>9}", "axis", "rmse", "mae", "mape %");
    for axis in Axis::ALL {
        let m = &report.per_axis[axis.label()];
        println!(
            "{:<6} {:>12.3} {:>12.3} {:>9.4}",
            axis.label(),
            m.rmse,
            m.mae,
            m.mape_percent
        );
    }
    println!(
        "pooled {:>12.3} {:>12.3} {:>9.4}",
        report.pooled.rmse, report.pooled.mae, report.pooled.mape_percent
    );
    Ok(())
}
