//! Fly an S-turn: piecewise heading-rate maneuvers bend the glide out of
//! the vertical plane, producing a genuinely three-dimensional track.
//!
//! Two segments command +1 deg/s for 40 s and then -1 deg/s for 80 s, so
//! the vehicle swings right, crosses back through its original heading,
//! and ends angled left of the release azimuth.
//!
//! ```text
//! cargo run --example maneuver_3d
//! ```

use glidecast::sim::{simulate, ManeuverSchedule, ManeuverSegment, PhysicalConstants, SimConfig};

fn main() -> glidecast::Result<()> {
    let rate = 1.0_f64.to_radians();
    let cfg = SimConfig {
        t_total: 200.0,
        maneuver: ManeuverSchedule {
            segments: vec![
                ManeuverSegment {
                    t_start: 20.0,
                    t_end: 60.0,
                    phi_rate: rate,
                },
                ManeuverSegment {
                    t_start: 60.0,
                    t_end: 140.0,
                    phi_rate: -rate,
                },
            ],
        },
        ..SimConfig::default()
    };
    cfg.maneuver.validate()?;
    let traj = simulate(&cfg, &PhysicalConstants::default())?;

    println!("      t    heading      x (km)     y (km)     z (km)");
    for (s, state) in traj.samples.iter().zip(&traj.states).step_by(200) {
        println!(
            "{:7.1} {:8.1}° {:10.2} {:10.2} {:10.2}",
            s.t,
            state.phi.to_degrees(),
            s.x / 1000.0,
            s.y / 1000.0,
            s.z / 1000.0
        );
    }

    let max_crossrange = traj
        .samples
        .iter()
        .max_by(|a, b| a.y.abs().total_cmp(&b.y.abs()))
        .expect("non-empty trajectory");
    let final_heading = traj.states.last().expect("non-empty trajectory").phi;
    println!(
        "\npeak cross-range {:.2} km at t = {:.1} s; final heading {:.1}° \
         after the S-turn (commanded net: 40 s x +1°/s, 80 s x -1°/s)",
        max_crossrange.y / 1000.0,
        max_crossrange.t,
        final_heading.to_degrees()
    );
    Ok(())
}
