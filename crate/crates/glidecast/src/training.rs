//! Training loop, Adam optimizer, and evaluation metrics.
//!
//! Each axis model is trained independently on mean-squared error in
//! normalized space: shuffled mini-batches (one Adam step per batch, the
//! final short batch included), gradients averaged over the batch through
//! the factor `2 (p - t) / n` supplied by [`mse_loss`]. Shuffling and
//! dropout for one axis share a single [`RngStream`] seeded with
//! `shuffle_seed + axis index`, which makes the whole run reproducible
//! from the configured seeds alone.
//!
//! [`evaluate`] reports teacher-forced one-step errors in physical units
//! (meters): RMSE, MAE, and MAPE, pooled and per axis. Targets below 1 m
//! in magnitude are excluded from MAPE (their relative error is
//! meaningless) and the exclusion counts are reported alongside.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{Axis, SequenceDataset};
use crate::error::{Error, Result};
use crate::model::{model_backward, model_forward, predict_next, AxisModelSet, ForwardTape};
use crate::nn::ops::Mode;
use crate::nn::rng::RngStream;
use crate::nn::tensor::Parameter;

/// Absolute-target floor below which a sample is excluded from MAPE.
pub const MAPE_EXCLUSION_FLOOR: f64 = 1.0;

/// Optimization hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Number of passes over the training windows.
    pub epochs: usize,
    /// Mini-batch size (the last batch of an epoch may be smaller).
    pub batch_size: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Adam first-moment decay.
    pub beta1: f64,
    /// Adam second-moment decay.
    pub beta2: f64,
    /// Adam denominator guard.
    pub epsilon: f64,
    /// Base seed for shuffling and dropout; axis index is added per model.
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 16,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            shuffle_seed: 45,
        }
    }
}

impl TrainConfig {
    /// Rejects hyperparameters outside their domains.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidInput(
                "training.batch_size must be at least 1".into(),
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::InvalidInput(format!(
                "training.learning_rate must be positive and finite, got {}",
                self.learning_rate
            )));
        }
        for (name, value) in [
            ("training.beta1", self.beta1),
            ("training.beta2", self.beta2),
        ] {
            if !(value.is_finite() && (0.0..1.0).contains(&value)) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in [0, 1), got {value}"
                )));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "training.epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// Mean-squared error and its gradient `2 (p_i - t_i) / n`.
pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if predictions.len() != targets.len() {
        return Err(Error::Shape(format!(
            "loss over {} predictions but {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::InvalidInput(
            "loss of an empty batch is undefined".into(),
        ));
    }
    let n = predictions.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(predictions.len());
    for (&p, &t) in predictions.iter().zip(targets) {
        let diff = p - t;
        loss += diff * diff;
        grad.push(2.0 * diff / n);
    }
    Ok((loss / n, grad))
}

/// Per-parameter Adam moment estimates for one model.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    /// Completed update steps (drives bias correction).
    t: u64,
}

impl AdamState {
    /// Fresh zeroed state shaped like the given parameter list.
    pub fn new(params: &[(String, &Parameter)]) -> Self {
        AdamState {
            m: params.iter().map(|(_, p)| vec![0.0; p.count()]).collect(),
            v: params.iter().map(|(_, p)| vec![0.0; p.count()]).collect(),
            t: 0,
        }
    }

    /// Number of completed steps.
    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One Adam update over a parameter list, consuming the accumulated
/// gradients (which are left untouched; callers zero them per batch).
pub fn adam_step(
    params: &mut [(String, &mut Parameter)],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if params.len() != state.m.len() {
        return Err(Error::State(format!(
            "optimizer state tracks {} parameters, model has {}",
            state.m.len(),
            params.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bias1 = 1.0 - cfg.beta1.powi(t);
    let bias2 = 1.0 - cfg.beta2.powi(t);
    for (slot, (name, p)) in params.iter_mut().enumerate() {
        let (m, v) = (&mut state.m[slot], &mut state.v[slot]);
        if m.len() != p.count() {
            return Err(Error::State(format!(
                "optimizer slot for {name} holds {} entries, parameter has {}",
                m.len(),
                p.count()
            )));
        }
        let grads = p.grad.data();
        for i in 0..m.len() {
            let g = grads[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        }
        let values = p.value.data_mut();
        for i in 0..values.len() {
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            values[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
    Ok(())
}

/// One row of training history: per-epoch mean loss and MAE for one axis,
/// computed from the training-mode (dropout-active) predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Axis of the model this row describes.
    pub axis: Axis,
    /// Mean squared error over the epoch's training windows.
    pub loss: f64,
    /// Mean absolute error over the epoch's training windows.
    pub mae: f64,
}

/// Trains all three axis models on a normalized training split.
///
/// Returns the history sorted by `(epoch, axis)`. With zero epochs the
/// models are untouched and the history is empty.
pub fn train(
    set: &mut AxisModelSet,
    train_split: &SequenceDataset,
    cfg: &TrainConfig,
) -> Result<Vec<EpochRecord>> {
    cfg.validate()?;
    if train_split.sequence_length != set.sequence_length {
        return Err(Error::Shape(format!(
            "training windows have length {}, models expect {}",
            train_split.sequence_length, set.sequence_length
        )));
    }
    let n = train_split.inputs.len();
    if n == 0 {
        return Err(Error::InsufficientData(
            "training split holds no windows".into(),
        ));
    }

    let mut history = Vec::with_capacity(cfg.epochs * 3);
    for axis in Axis::ALL {
        let mut stream = RngStream::new(cfg.shuffle_seed + axis.index() as u64);
        let model = set.model_mut(axis);
        let mut adam = AdamState::new(&model.named_parameters());
        let targets = &train_split.targets[axis.index()];

        for epoch in 1..=cfg.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            stream.shuffle(&mut order);

            let mut sq_sum = 0.0;
            let mut abs_sum = 0.0;
            for batch in order.chunks(cfg.batch_size) {
                let mut preds = Vec::with_capacity(batch.len());
                let mut batch_targets = Vec::with_capacity(batch.len());
                let mut tapes: Vec<ForwardTape> = Vec::with_capacity(batch.len());
                for &i in batch {
                    let (pred, tape) =
                        model_forward(model, &train_split.inputs[i], Mode::Train, &mut stream)?;
                    preds.push(pred);
                    batch_targets.push(targets[i]);
                    tapes.push(tape);
                }
                let (_, grads) = mse_loss(&preds, &batch_targets)?;
                model.zero_grads();
                for (tape, g) in tapes.iter().zip(&grads) {
                    model_backward(model, tape, *g)?;
                }
                adam_step(&mut model.named_parameters_mut(), &mut adam, cfg)?;

                for (&p, &t) in preds.iter().zip(&batch_targets) {
                    let diff = p - t;
                    sq_sum += diff * diff;
                    abs_sum += diff.abs();
                }
            }
            history.push(EpochRecord {
                epoch,
                axis,
                loss: sq_sum / n as f64,
                mae: abs_sum / n as f64,
            });
        }
    }
    history.sort_by_key(|r| (r.epoch, r.axis.index()));
    Ok(history)
}

/// Error metrics for one axis (or pooled over all axes), in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSet {
    /// Root mean squared error.
    pub rmse: f64,
    /// Mean absolute error.
    pub mae: f64,
    /// Mean absolute percentage error over targets of at least 1 m.
    pub mape_percent: f64,
    /// Count of targets excluded from the MAPE mean.
    pub mape_excluded_count: usize,
}

/// Full evaluation report: pooled metrics plus a per-axis breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    /// Metrics pooled over all axes and samples.
    pub pooled: MetricSet,
    /// Per-axis metrics keyed by axis label.
    pub per_axis: BTreeMap<String, MetricSet>,
}

fn metric_set(errors: &[f64], targets: &[f64]) -> MetricSet {
    let n = errors.len() as f64;
    let sq: f64 = errors.iter().map(|e| e * e).sum();
    let abs: f64 = errors.iter().map(|e| e.abs()).sum();
    let mut pct_sum = 0.0;
    let mut included = 0usize;
    for (e, t) in errors.iter().zip(targets) {
        if t.abs() >= MAPE_EXCLUSION_FLOOR {
            pct_sum += (e / t).abs();
            included += 1;
        }
    }
    MetricSet {
        rmse: (sq / n).sqrt(),
        mae: abs / n,
        mape_percent: if included == 0 {
            0.0
        } else {
            100.0 * pct_sum / included as f64
        },
        mape_excluded_count: errors.len() - included,
    }
}

/// Teacher-forced one-step evaluation on physical-units test pairs.
///
/// Each window is normalized with the model set's stored scaling, every
/// axis model predicts its next coordinate, and errors are measured in
/// meters against the raw targets.
pub fn evaluate(set: &AxisModelSet, test_raw: &SequenceDataset) -> Result<EvalReport> {
    if test_raw.sequence_length != set.sequence_length {
        return Err(Error::Shape(format!(
            "test windows have length {}, models expect {}",
            test_raw.sequence_length, set.sequence_length
        )));
    }
    let n = test_raw.inputs.len();
    if n == 0 {
        return Err(Error::InsufficientData(
            "evaluation split holds no windows".into(),
        ));
    }

    let mut errors: [Vec<f64>; 3] = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for (i, window) in test_raw.inputs.iter().enumerate() {
        let (px, py, pz) = predict_next(set, window)?;
        let preds = [px, py, pz];
        for axis in Axis::ALL {
            errors[axis.index()].push(preds[axis.index()] - test_raw.targets[axis.index()][i]);
        }
    }

    let mut per_axis = BTreeMap::new();
    for axis in Axis::ALL {
        per_axis.insert(
            axis.label().to_string(),
            metric_set(&errors[axis.index()], &test_raw.targets[axis.index()]),
        );
    }
    let pooled_errors: Vec<f64> = errors.iter().flat_map(|e| e.iter().copied()).collect();
    let pooled_targets: Vec<f64> = test_raw
        .targets
        .iter()
        .flat_map(|t| t.iter().copied())
        .collect();
    Ok(EvalReport {
        pooled: metric_set(&pooled_errors, &pooled_targets),
        per_axis,
    })
}
