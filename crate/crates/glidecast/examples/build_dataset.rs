//! Turn a trajectory into supervised sequence data: sliding windows,
//! a chronological train/test split, and min-max normalization fitted on
//! the training windows only.
//!
//! Each pair maps `L` consecutive `(x, y, z)` positions to the position
//! one step ahead. Planar flight makes the `y` channel constant, which
//! the normalizer flags as degenerate and maps to zero.
//!
//! ```text
//! cargo run --example build_dataset
//! ```

use glidecast::config::RunConfig;
use glidecast::dataset::prepare;
use glidecast::sim::simulate;

fn main() -> glidecast::Result<()> {
    let cfg = RunConfig::default();
    let traj = simulate(&cfg.to_sim_config(), &cfg.constants)?;
    let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec())?;

    let l = cfg.dataset.sequence_length;
    println!(
        "{} samples -> {} windowed pairs (window length {l}, target 1 step ahead)",
        traj.samples.len(),
        data.train.len() + data.test.len(),
    );
    println!(
        "chronological split at {:.0} %: {} train, {} test",
        cfg.dataset.train_fraction * 100.0,
        data.train.len(),
        data.test.len()
    );

    println!("\nper-channel scaling fitted on the training windows:");
    for (channel, name) in ["x", "y", "z"].iter().enumerate() {
        let scale = &data.normalizer.channels[channel];
        if scale.degenerate {
            println!(
                "  {name}: constant at {:.1} m (degenerate; normalized to 0)",
                scale.min
            );
        } else {
            println!("  {name}: [{:.1}, {:.1}] m -> [0, 1]", scale.min, scale.max);
        }
    }

    let first = &data.train.inputs[0];
    println!("\nfirst normalized training window (one row per timestep):");
    for row in 0..l {
        println!(
            "  [{:.6}, {:.6}, {:.6}]",
            first.at2(row, 0),
            first.at2(row, 1),
            first.at2(row, 2)
        );
    }
    println!(
        "  target (normalized): x {:.6}, y {:.6}, z {:.6}",
        data.train.targets[0][0], data.train.targets[1][0], data.train.targets[2][0]
    );
    Ok(())
}
