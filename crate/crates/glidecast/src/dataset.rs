//! Sliding-window supervised pairs from a trajectory.
//!
//! A `T`-sample trajectory becomes `N = T - L` pairs: window `i` covers
//! samples `[i, i+L)` as an `L x 3` tensor of `(x, y, z)` positions, and
//! its targets are the three coordinates of sample `i + L` — next-position
//! regression, one scalar target per axis.
//!
//! Pairs are split *chronologically* (train first, test after; no
//! shuffling) so forecasting is evaluated on genuinely future data, and a
//! min-max [`Normalizer`] is fitted on training inputs only — test data
//! never influences the scaling. Raw positions span hundreds of
//! kilometers, so normalization to `[0, 1]` is what makes the
//! sigmoid/tanh gates of the recurrent branches workable. Channels with
//! (near-)zero range — the crossrange axis of a planar flight — are
//! flagged degenerate: they normalize to 0 and invert back to the
//! constant, which keeps the pipeline total on planar trajectories.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;
use crate::sim::integrator::Trajectory;

/// Range below which a channel is considered constant.
pub const DEGENERATE_RANGE: f64 = 1e-9;

/// Coordinate axis; doubles as the channel index into window tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    /// Downrange.
    X,
    /// Crossrange.
    Y,
    /// Altitude.
    Z,
}

impl Axis {
    /// All axes in canonical `(x, y, z)` order.
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Channel index: x = 0, y = 1, z = 2.
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    /// Lower-case label used in files and reports.
    pub fn label(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }

    /// Axis for a channel index.
    pub fn from_index(index: usize) -> Result<Axis> {
        match index {
            0 => Ok(Axis::X),
            1 => Ok(Axis::Y),
            2 => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!(
                "unknown channel index {other} (expected 0, 1, or 2)"
            ))),
        }
    }

    /// Axis for a lower-case label.
    pub fn from_label(label: &str) -> Result<Axis> {
        match label {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidInput(format!(
                "unknown axis label {other:?} (expected \"x\", \"y\", or \"z\")"
            ))),
        }
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Windowed supervised pairs. Values are physical meters straight after
/// [`make_windows`] and normalized once a [`Normalizer`] has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    /// `N` windows, each an `L x 3` tensor.
    pub inputs: Vec<Tensor>,
    /// Per-axis targets: `targets[a][i]` is axis `a` of sample `i + L`.
    pub targets: [Vec<f64>; 3],
    /// Window length L.
    pub sequence_length: usize,
}

impl SequenceDataset {
    /// Number of pairs N.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    /// True when the partition holds no pairs.
    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// How to divide pairs between train and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    /// Fraction of pairs (chronologically first) assigned to training.
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
        }
    }
}

impl SplitSpec {
    /// Checks the fraction lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        if !self.train_fraction.is_finite() || !(0.0..=1.0).contains(&self.train_fraction) {
            return Err(Error::Config(format!(
                "dataset.train_fraction must lie in [0, 1], got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }
}

/// Min-max scaling parameters for one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    /// Smallest training value seen.
    pub min: f64,
    /// Largest training value seen.
    pub max: f64,
    /// True when `max - min` is below [`DEGENERATE_RANGE`]; such channels
    /// normalize to 0 and invert to `min`.
    pub degenerate: bool,
}

/// Per-channel affine scaling fitted on training inputs only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    /// Scaling for channels x, y, z in order.
    pub channels: [ChannelScale; 3],
}

impl Normalizer {
    /// Identity scaling (`min` 0, `max` 1) for every channel; useful as a
    /// fixture because `apply` and `invert` become the identity map.
    pub fn identity() -> Self {
        Normalizer {
            channels: [ChannelScale {
                min: 0.0,
                max: 1.0,
                degenerate: false,
            }; 3],
        }
    }

    /// Maps a physical value into normalized space for `channel`.
    ///
    /// Training values land in `[0, 1]`; out-of-range values (test-set
    /// extrapolation) map outside `[0, 1]` without clamping.
    pub fn apply(&self, value: f64, channel: usize) -> Result<f64> {
        let c = self.channel(channel)?;
        if c.degenerate {
            return Ok(0.0);
        }
        Ok((value - c.min) / (c.max - c.min))
    }

    /// Maps a normalized value back to physical units for `channel`.
    /// Degenerate channels return their constant (`min`).
    pub fn invert(&self, value: f64, channel: usize) -> Result<f64> {
        let c = self.channel(channel)?;
        if c.degenerate {
            return Ok(c.min);
        }
        Ok(c.min + value * (c.max - c.min))
    }

    /// Normalizes every input window and target of a dataset.
    pub fn apply_dataset(&self, ds: &SequenceDataset) -> Result<SequenceDataset> {
        let mut inputs = Vec::with_capacity(ds.len());
        for w in &ds.inputs {
            let mut normalized = w.clone();
            let cols = w.shape()[1];
            for row in 0..w.shape()[0] {
                for col in 0..cols {
                    let v = self.apply(w.at2(row, col), col)?;
                    normalized.set2(row, col, v);
                }
            }
            inputs.push(normalized);
        }
        let mut targets: [Vec<f64>; 3] = Default::default();
        for (c, t) in targets.iter_mut().enumerate() {
            *t = ds.targets[c]
                .iter()
                .map(|&v| self.apply(v, c))
                .collect::<Result<_>>()?;
        }
        Ok(SequenceDataset {
            inputs,
            targets,
            sequence_length: ds.sequence_length,
        })
    }

    fn channel(&self, channel: usize) -> Result<&ChannelScale> {
        self.channels.get(channel).ok_or_else(|| {
            Error::InvalidInput(format!(
                "unknown channel index {channel} (expected 0, 1, or 2)"
            ))
        })
    }
}

/// Cuts a trajectory into `N = T - L` raw (physical-units) pairs.
///
/// Window `i` covers samples `[i, i+L)`; target `i` is sample `i+L`.
pub fn make_windows(traj: &Trajectory, sequence_length: usize) -> Result<SequenceDataset> {
    if sequence_length < 3 {
        return Err(Error::InvalidWindow(format!(
            "sequence length must be at least 3 (the convolution kernel width), got {sequence_length}"
        )));
    }
    let t = traj.samples.len();
    if t <= sequence_length {
        return Err(Error::InsufficientData(format!(
            "trajectory has {t} samples; need more than the window length {sequence_length}"
        )));
    }
    let n = t - sequence_length;
    let mut inputs = Vec::with_capacity(n);
    let mut targets: [Vec<f64>; 3] = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for i in 0..n {
        let mut w = Tensor::zeros(&[sequence_length, 3]);
        for (row, s) in traj.samples[i..i + sequence_length].iter().enumerate() {
            w.set2(row, 0, s.x);
            w.set2(row, 1, s.y);
            w.set2(row, 2, s.z);
        }
        inputs.push(w);
        let target = traj.samples[i + sequence_length];
        targets[0].push(target.x);
        targets[1].push(target.y);
        targets[2].push(target.z);
    }
    Ok(SequenceDataset {
        inputs,
        targets,
        sequence_length,
    })
}

/// Splits pairs chronologically: the first `floor(train_fraction * N)`
/// pairs train, the remainder test; order is preserved.
pub fn chronological_split(
    pairs: &SequenceDataset,
    spec: &SplitSpec,
) -> Result<(SequenceDataset, SequenceDataset)> {
    spec.validate()?;
    let n = pairs.len();
    let n_train = ((spec.train_fraction * n as f64).floor() as usize).min(n);
    let take = |range: std::ops::Range<usize>| SequenceDataset {
        inputs: pairs.inputs[range.clone()].to_vec(),
        targets: [
            pairs.targets[0][range.clone()].to_vec(),
            pairs.targets[1][range.clone()].to_vec(),
            pairs.targets[2][range].to_vec(),
        ],
        sequence_length: pairs.sequence_length,
    };
    Ok((take(0..n_train), take(n_train..n)))
}

/// Fits per-channel min-max scaling over every timestep of the training
/// windows. Test data must not be passed here — and nothing else is ever
/// consulted.
pub fn fit_normalizer(train_inputs: &[Tensor]) -> Result<Normalizer> {
    if train_inputs.is_empty() {
        return Err(Error::InsufficientData(
            "cannot fit a normalizer on zero training windows".into(),
        ));
    }
    let mut mins = [f64::INFINITY; 3];
    let mut maxs = [f64::NEG_INFINITY; 3];
    for w in train_inputs {
        let (rows, cols) = (w.shape()[0], w.shape()[1]);
        if cols != 3 {
            return Err(Error::Shape(format!(
                "windows must have 3 channels, got {cols}"
            )));
        }
        for row in 0..rows {
            for col in 0..cols {
                let v = w.at2(row, col);
                if !v.is_finite() {
                    return Err(Error::InvalidInput(
                        "non-finite value in training windows".into(),
                    ));
                }
                mins[col] = mins[col].min(v);
                maxs[col] = maxs[col].max(v);
            }
        }
    }
    let channels = [0, 1, 2].map(|c| ChannelScale {
        min: mins[c],
        max: maxs[c],
        degenerate: maxs[c] - mins[c] < DEGENERATE_RANGE,
    });
    Ok(Normalizer { channels })
}

/// Convenience free function mirroring [`Normalizer::apply`].
pub fn normalize_apply(n: &Normalizer, value: f64, channel: usize) -> Result<f64> {
    n.apply(value, channel)
}

/// Convenience free function mirroring [`Normalizer::invert`].
pub fn normalize_invert(n: &Normalizer, value: f64, channel: usize) -> Result<f64> {
    n.invert(value, channel)
}

/// Fully prepared data for training and evaluation: normalized train and
/// test partitions plus the normalizer that produced them.
#[derive(Debug, Clone)]
pub struct PreparedData {
    /// Normalized training pairs.
    pub train: SequenceDataset,
    /// Normalized test pairs.
    pub test: SequenceDataset,
    /// Scaling fitted on the raw training inputs.
    pub normalizer: Normalizer,
    /// Raw (physical-units) test pairs, kept for metric computation.
    pub test_raw: SequenceDataset,
}

/// Windows, splits, fits, and normalizes a trajectory in one call.
pub fn prepare(
    traj: &Trajectory,
    sequence_length: usize,
    spec: &SplitSpec,
) -> Result<PreparedData> {
    let pairs = make_windows(traj, sequence_length)?;
    let (train_raw, test_raw) = chronological_split(&pairs, spec)?;
    let normalizer = fit_normalizer(&train_raw.inputs)?;
    Ok(PreparedData {
        train: normalizer.apply_dataset(&train_raw)?,
        test: normalizer.apply_dataset(&test_raw)?,
        normalizer,
        test_raw,
    })
}
