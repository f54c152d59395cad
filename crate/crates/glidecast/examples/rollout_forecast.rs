//! Recursive multi-step forecasting: train briefly, save the models,
//! reload them, and roll a forecast forward by feeding each prediction
//! back in as input.
//!
//! The seed window is taken from the held-out part of the flight, so the
//! printed comparison pits the recursive forecast against positions the
//! models never trained on. Errors compound with horizon — the hallmark
//! of closed-loop rollout versus one-step teacher forcing.
//!
//! ```text
//! cargo run --release --example rollout_forecast
//! ```

use glidecast::config::RunConfig;
use glidecast::dataset::prepare;
use glidecast::model::{build_axis_set, load_model, rollout, save_model};
use glidecast::nn::Tensor;
use glidecast::sim::simulate;
use glidecast::training::train;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = RunConfig::default();
    cfg.sim.t_total = 60.0;
    cfg.training.epochs = 8;
    cfg.validate()?;
    let l = cfg.dataset.sequence_length;

    let traj = simulate(&cfg.to_sim_config(), &cfg.constants)?;
    let data = prepare(&traj, l, &cfg.split_spec())?;
    let mut set = build_axis_set(l, cfg.model_seeds(), data.normalizer.clone())?;
    train(&mut set, &data.train, &cfg.to_train_config())?;

    // Persist and reload: the files round-trip bit-exactly, so the
    // reloaded set forecasts identically.
    let dir = tempfile::tempdir()?;
    save_model(&set, dir.path())?;
    let reloaded = load_model(dir.path())?;
    println!(
        "saved and reloaded models from {} (window length {})\n",
        dir.path().display(),
        reloaded.sequence_length
    );

    // Seed the rollout with the first fully held-out window. The flight
    // coordinates grow monotonically, so later test windows sit outside
    // the range the normalizer saw in training and the one-step models
    // extrapolate; starting at the boundary keeps the comparison fair.
    let seed_start = (0.8 * (traj.samples.len() - l) as f64).floor() as usize;
    let mut window = Tensor::zeros(&[l, 3]);
    for (row, s) in traj.samples[seed_start..seed_start + l].iter().enumerate() {
        window.set2(row, 0, s.x);
        window.set2(row, 1, s.y);
        window.set2(row, 2, s.z);
    }

    let steps = 20;
    let forecast = rollout(&reloaded, &window, steps)?;
    println!("step      t   forecast x   actual x  forecast z   actual z   |err| (m)");
    let mut errors = Vec::with_capacity(steps);
    for (k, (px, _py, pz)) in forecast.iter().enumerate() {
        let actual = &traj.samples[seed_start + l + k];
        let err = ((px - actual.x).powi(2) + (pz - actual.z).powi(2)).sqrt();
        errors.push(err);
        if k < 3 || (k + 1) % 5 == 0 {
            println!(
                "{:>4} {:>6.1} {:>12.1} {:>10.1} {:>11.1} {:>10.1} {:>9.2}",
                k + 1,
                actual.t,
                px,
                actual.x,
                pz,
                actual.z,
                err
            );
        }
    }
    println!(
        "\nposition error grows {:.1}x over {steps} recursive steps \
         ({:.1} -> {:.1} km): each prediction feeds the next, so one-step \
         errors compound instead of averaging out",
        errors[steps - 1] / errors[0],
        errors[0] / 1000.0,
        errors[steps - 1] / 1000.0
    );
    Ok(())
}
