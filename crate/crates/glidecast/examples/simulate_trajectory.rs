//! Simulate the default planar glide and summarize the trajectory.
//!
//! The vehicle releases at 80 km altitude and 5.1 km/s with a shallow
//! -5 degree path angle, then glides under inverse-square gravity,
//! exponential-atmosphere drag, and lift for five minutes of simulated
//! time at a 0.1 s timestep.
//!
//! ```text
//! cargo run --example simulate_trajectory
//! ```

use glidecast::sim::{simulate, PhysicalConstants, SimConfig};

fn main() -> glidecast::Result<()> {
    let cfg = SimConfig::default();
    let constants = PhysicalConstants::default();
    let traj = simulate(&cfg, &constants)?;

    println!(
        "simulated {} samples over {:.0} s (dt = {} s), terminated by {}",
        traj.samples.len(),
        cfg.t_total,
        cfg.dt,
        traj.termination
    );

    println!("\n      t          x          y          z");
    for idx in [0, 1, 2, traj.samples.len() / 2, traj.samples.len() - 1] {
        let s = &traj.samples[idx];
        println!("{:7.1} {:10.1} {:10.1} {:10.1}", s.t, s.x, s.y, s.z);
    }

    let lowest = traj
        .samples
        .iter()
        .min_by(|a, b| a.z.total_cmp(&b.z))
        .expect("non-empty trajectory");
    let last = traj.samples.last().expect("non-empty trajectory");
    println!(
        "\ndownrange {:.1} km; altitude dips to {:.1} km at t = {:.1} s \
         (skip-glide), ending at {:.1} km",
        last.x / 1000.0,
        lowest.z / 1000.0,
        lowest.t,
        last.z / 1000.0
    );
    Ok(())
}
