//! Shared helpers for the integration suites: independent reference
//! implementations of the layers (naive index arithmetic, no shared code
//! with the library kernels), central finite-difference machinery, and
//! the seeded end-to-end pipeline used by the acceptance checks.

// The naive layer references below spell out textbook index arithmetic on
// purpose — they must not share structure with the library kernels.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::Path;

use glidecast::config::RunConfig;
use glidecast::dataset::prepare;
use glidecast::io::{write_history_csv, write_metrics_json};
use glidecast::model::{build_axis_set, model_to_json, save_model, AxisModelSet, HybridModel};
use glidecast::nn::recurrent::{GruParams, LstmParams};
use glidecast::nn::rng::RngStream;
use glidecast::nn::tensor::Tensor;
use glidecast::sim::simulate;
use glidecast::training::{evaluate, train, EpochRecord, EvalReport};

/// Relative error with an absolute floor, for finite-difference checks.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central finite difference of `f` at `x` with a magnitude-aware step.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64) -> f64 {
    let h = 1e-6 * (x.abs() + 1.0);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// A pseudo-random tensor with entries in `[lo, hi)`.
pub fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut RngStream) -> Tensor {
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.uniform(lo, hi);
    }
    t
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Brute-force valid cross-correlation, the reference for conv1d:
/// `out[p][k] = bias[k] + sum_{c,w} input[p+w][c] * kernels[k][c][w]`.
pub fn naive_conv1d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Tensor {
    let (l, c_in) = (input.shape()[0], input.shape()[1]);
    let (k, width) = (kernels.shape()[0], kernels.shape()[2]);
    let out_len = l - width + 1;
    let mut out = Tensor::zeros(&[out_len, k]);
    for p in 0..out_len {
        for f in 0..k {
            let mut acc = bias.at1(f);
            for c in 0..c_in {
                for w in 0..width {
                    acc += input.at2(p + w, c) * kernels.at3(f, c, w);
                }
            }
            out.set2(p, f, acc);
        }
    }
    out
}

/// Reference LSTM layer: explicit per-step cell arithmetic with naive
/// summation, standard gate equations, returning all hidden states.
pub fn naive_lstm_layer(seq: &Tensor, p: &LstmParams) -> Tensor {
    let (l, d) = (seq.shape()[0], seq.shape()[1]);
    let h_size = p.hidden_size();
    let mut h = vec![0.0; h_size];
    let mut c = vec![0.0; h_size];
    let mut out = Tensor::zeros(&[l, h_size]);
    for t in 0..l {
        let gate = |w: &Tensor, u: &Tensor, b: &Tensor, j: usize| -> f64 {
            let mut acc = b.at1(j);
            for k in 0..d {
                acc += w.at2(j, k) * seq.at2(t, k);
            }
            for k in 0..h_size {
                acc += u.at2(j, k) * h[k];
            }
            acc
        };
        let mut next_h = vec![0.0; h_size];
        let mut next_c = vec![0.0; h_size];
        for j in 0..h_size {
            let i_g = sigmoid(gate(&p.i.w.value, &p.i.u.value, &p.i.b.value, j));
            let f_g = sigmoid(gate(&p.f.w.value, &p.f.u.value, &p.f.b.value, j));
            let o_g = sigmoid(gate(&p.o.w.value, &p.o.u.value, &p.o.b.value, j));
            let g_g = gate(&p.c.w.value, &p.c.u.value, &p.c.b.value, j).tanh();
            next_c[j] = f_g * c[j] + i_g * g_g;
            next_h[j] = o_g * next_c[j].tanh();
        }
        h = next_h;
        c = next_c;
        for j in 0..h_size {
            out.set2(t, j, h[j]);
        }
    }
    out
}

/// Reference GRU layer: explicit per-step cell arithmetic (reset gate
/// applied to the previous state before the candidate), returning the
/// final hidden state.
pub fn naive_gru_layer(seq: &Tensor, p: &GruParams) -> Tensor {
    let (l, d) = (seq.shape()[0], seq.shape()[1]);
    let h_size = p.hidden_size();
    let mut h = vec![0.0; h_size];
    for t in 0..l {
        let gate = |w: &Tensor, u: &Tensor, b: &Tensor, j: usize, state: &[f64]| -> f64 {
            let mut acc = b.at1(j);
            for k in 0..d {
                acc += w.at2(j, k) * seq.at2(t, k);
            }
            for k in 0..h_size {
                acc += u.at2(j, k) * state[k];
            }
            acc
        };
        let mut z = vec![0.0; h_size];
        let mut r = vec![0.0; h_size];
        for j in 0..h_size {
            z[j] = sigmoid(gate(&p.z.w.value, &p.z.u.value, &p.z.b.value, j, &h));
            r[j] = sigmoid(gate(&p.r.w.value, &p.r.u.value, &p.r.b.value, j, &h));
        }
        let rh: Vec<f64> = (0..h_size).map(|k| r[k] * h[k]).collect();
        let mut next_h = vec![0.0; h_size];
        for j in 0..h_size {
            let g = gate(&p.h.w.value, &p.h.u.value, &p.h.b.value, j, &rh).tanh();
            next_h[j] = (1.0 - z[j]) * h[j] + z[j] * g;
        }
        h = next_h;
    }
    Tensor::from_vec(&[h_size], h).expect("state length")
}

/// Maximum absolute elementwise deviation between two same-shape tensors.
pub fn max_abs_dev(a: &Tensor, b: &Tensor) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in comparison");
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Worst relative error of a model's analytic parameter gradients versus
/// central finite differences of the forward scalar.
///
/// The forward pass runs in training mode with a cloned dropout stream so
/// every evaluation sees identical masks. Parameters of `stride` > 1 are
/// checked on a deterministic subsample (first element always included).
///
/// The error denominator is floored at `1e-6`: with a forward scalar of
/// order 0.1 the central difference carries ~1e-11 of roundoff noise, so
/// gradients smaller than the floor are compared absolutely (a genuinely
/// wrong gradient still deviates by its own magnitude and is caught).
pub fn model_param_fd_error(
    model: &mut HybridModel,
    window: &Tensor,
    dropout_seed: u64,
    stride: usize,
) -> f64 {
    use glidecast::model::{model_backward, model_forward};
    use glidecast::nn::ops::Mode;

    let base = RngStream::new(dropout_seed);
    let forward = |m: &HybridModel| -> f64 {
        model_forward(m, window, Mode::Train, &mut base.clone())
            .expect("forward")
            .0
    };

    model.zero_grads();
    let (_, tape) = model_forward(model, window, Mode::Train, &mut base.clone()).expect("forward");
    model_backward(model, &tape, 1.0).expect("backward");

    let grads: Vec<Vec<f64>> = model
        .named_parameters()
        .iter()
        .map(|(_, p)| p.grad.data().to_vec())
        .collect();

    let mut worst = 0.0f64;
    let param_count = grads.len();
    for slot in 0..param_count {
        let len = grads[slot].len();
        let mut idx = 0;
        while idx < len {
            let original = model.named_parameters()[slot].1.value.data()[idx];
            let h = 1e-6 * (original.abs() + 1.0);

            model.named_parameters_mut()[slot].1.value.data_mut()[idx] = original + h;
            let plus = forward(model);
            model.named_parameters_mut()[slot].1.value.data_mut()[idx] = original - h;
            let minus = forward(model);
            model.named_parameters_mut()[slot].1.value.data_mut()[idx] = original;

            let numeric = (plus - minus) / (2.0 * h);
            let analytic = grads[slot][idx];
            let err = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
            if err > 1e-4 {
                eprintln!(
                    "fd offender: {} [{idx}] analytic {:+e} numeric {:+e} rel {err:e}",
                    model.named_parameters()[slot].0,
                    grads[slot][idx],
                    numeric
                );
            }
            worst = worst.max(err);
            idx += stride;
        }
    }
    worst
}

/// Everything produced by one seeded end-to-end pipeline run.
pub struct PipelineArtifacts {
    /// Serialized model files in x, y, z order.
    pub model_jsons: [String; 3],
    /// Bytes of the metrics report file.
    pub metrics_bytes: Vec<u8>,
    /// Bytes of the history CSV.
    pub history_bytes: Vec<u8>,
    /// Training history records.
    pub history: Vec<EpochRecord>,
    /// Evaluation report.
    pub report: EvalReport,
    /// Wall-clock seconds for simulate + train + evaluate.
    pub elapsed_seconds: f64,
}

/// Runs the full simulate → window → train → evaluate pipeline for a
/// config, writing the artifacts into `dir` and returning their bytes.
pub fn run_pipeline(cfg: &RunConfig, dir: &Path) -> PipelineArtifacts {
    let started = std::time::Instant::now();

    let traj = simulate(&cfg.to_sim_config(), &cfg.constants).expect("simulate");
    let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec()).expect("prepare");
    let mut set = build_axis_set(
        cfg.dataset.sequence_length,
        cfg.model_seeds(),
        data.normalizer.clone(),
    )
    .expect("build models");
    let history = train(&mut set, &data.train, &cfg.to_train_config()).expect("train");
    let report = evaluate(&set, &data.test_raw).expect("evaluate");

    let elapsed_seconds = started.elapsed().as_secs_f64();

    let models_dir = dir.join("models");
    save_model(&set, &models_dir).expect("save models");
    let metrics_path = dir.join("metrics.json");
    write_metrics_json(&report, cfg, &metrics_path).expect("write metrics");
    let history_path = models_dir.join("history.csv");
    write_history_csv(&history, &history_path).expect("write history");

    let model_jsons = [
        model_to_json(set.model(glidecast::dataset::Axis::X), &set.normalizer).expect("json"),
        model_to_json(set.model(glidecast::dataset::Axis::Y), &set.normalizer).expect("json"),
        model_to_json(set.model(glidecast::dataset::Axis::Z), &set.normalizer).expect("json"),
    ];
    PipelineArtifacts {
        model_jsons,
        metrics_bytes: std::fs::read(&metrics_path).expect("read metrics"),
        history_bytes: std::fs::read(&history_path).expect("read history"),
        history,
        report,
        elapsed_seconds,
    }
}

/// The trained model set alone, for tests that need to probe it.
pub fn train_pipeline_models(cfg: &RunConfig) -> AxisModelSet {
    let traj = simulate(&cfg.to_sim_config(), &cfg.constants).expect("simulate");
    let data = prepare(&traj, cfg.dataset.sequence_length, &cfg.split_spec()).expect("prepare");
    let mut set = build_axis_set(
        cfg.dataset.sequence_length,
        cfg.model_seeds(),
        data.normalizer.clone(),
    )
    .expect("build models");
    train(&mut set, &data.train, &cfg.to_train_config()).expect("train");
    set
}
