//! Run configuration: one JSON document merged over built-in defaults.
//!
//! The document has five optional sections — `constants`, `sim`,
//! `dataset`, `training`, `seeds` — and any field missing from a section
//! falls back to its default, so `{}` reproduces the default run exactly.
//! Unknown keys anywhere are rejected rather than ignored: a typo like
//! `"t_totl"` fails loudly instead of silently running the default.
//!
//! Angles in the document are in **degrees** (`theta0_deg`, `phi0_deg`,
//! maneuver `phi_rate_deg_per_s`) and are converted to radians exactly
//! once, when the document is lowered into a [`SimConfig`]. Everything
//! else is SI: meters, seconds, kilograms.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::SplitSpec;
use crate::error::{Error, Result};
use crate::sim::{ManeuverSchedule, ManeuverSegment, PhysicalConstants, SimConfig};
use crate::training::TrainConfig;

/// `sim` section: timestep, horizon, and release state, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    /// Integration timestep (s).
    pub dt: f64,
    /// Simulated time horizon (s).
    pub t_total: f64,
    /// Release speed (m/s).
    pub v0: f64,
    /// Release altitude (m).
    pub h0: f64,
    /// Release glide path angle (degrees; negative is downward).
    pub theta0_deg: f64,
    /// Release heading angle (degrees).
    pub phi0_deg: f64,
    /// Piecewise-constant heading-rate schedule; empty for planar flight.
    pub maneuver: Vec<ManeuverSegmentSpec>,
}

impl Default for SimSection {
    fn default() -> Self {
        SimSection {
            dt: 0.1,
            t_total: 300.0,
            v0: 5100.0,
            h0: 80_000.0,
            theta0_deg: -5.0,
            phi0_deg: 0.0,
            maneuver: Vec::new(),
        }
    }
}

/// One maneuver window in config units (all three fields required).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSegmentSpec {
    /// Window start (s, inclusive).
    pub t_start: f64,
    /// Window end (s, exclusive).
    pub t_end: f64,
    /// Heading rate inside the window (degrees per second).
    pub phi_rate_deg_per_s: f64,
}

/// `dataset` section: windowing and split parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSection {
    /// Window length L fed to the models.
    pub sequence_length: usize,
    /// Fraction of windows placed in the chronological training split.
    pub train_fraction: f64,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            sequence_length: 10,
            train_fraction: 0.8,
        }
    }
}

/// `training` section: optimizer hyperparameters
/// (seeds live in the `seeds` section).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingSection {
    /// Number of epochs.
    pub epochs: usize,
    /// Mini-batch size.
    pub batch_size: usize,
    /// Adam step size.
    pub learning_rate: f64,
    /// Adam first-moment decay.
    pub beta1: f64,
    /// Adam second-moment decay.
    pub beta2: f64,
    /// Adam denominator guard.
    pub epsilon: f64,
}

impl Default for TrainingSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainingSection {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
        }
    }
}

/// `seeds` section: one seed per axis model plus the shuffle seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedsSection {
    /// Initialization seed for the x model.
    pub model_x: u64,
    /// Initialization seed for the y model.
    pub model_y: u64,
    /// Initialization seed for the z model.
    pub model_z: u64,
    /// Shuffling/dropout base seed shared by the training loop.
    pub shuffle: u64,
}

impl Default for SeedsSection {
    fn default() -> Self {
        SeedsSection {
            model_x: 42,
            model_y: 43,
            model_z: 44,
            shuffle: 45,
        }
    }
}

/// The whole run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Physical constants and vehicle properties.
    pub constants: PhysicalConstants,
    /// Simulation parameters.
    pub sim: SimSection,
    /// Dataset construction parameters.
    pub dataset: DatasetSection,
    /// Optimizer hyperparameters.
    pub training: TrainingSection,
    /// All randomness seeds.
    pub seeds: SeedsSection,
}

impl RunConfig {
    /// Lowers the `sim` section into internal radian units.
    pub fn to_sim_config(&self) -> SimConfig {
        SimConfig {
            dt: self.sim.dt,
            t_total: self.sim.t_total,
            v0: self.sim.v0,
            h0: self.sim.h0,
            theta0: self.sim.theta0_deg.to_radians(),
            phi0: self.sim.phi0_deg.to_radians(),
            maneuver: ManeuverSchedule {
                segments: self
                    .sim
                    .maneuver
                    .iter()
                    .map(|s| ManeuverSegment {
                        t_start: s.t_start,
                        t_end: s.t_end,
                        phi_rate: s.phi_rate_deg_per_s.to_radians(),
                    })
                    .collect(),
            },
        }
    }

    /// Combines the `training` section with the shuffle seed.
    pub fn to_train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.training.epochs,
            batch_size: self.training.batch_size,
            learning_rate: self.training.learning_rate,
            beta1: self.training.beta1,
            beta2: self.training.beta2,
            epsilon: self.training.epsilon,
            shuffle_seed: self.seeds.shuffle,
        }
    }

    /// Split fraction as a [`SplitSpec`].
    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.dataset.train_fraction,
        }
    }

    /// Per-axis model seeds in x, y, z order.
    pub fn model_seeds(&self) -> [u64; 3] {
        [self.seeds.model_x, self.seeds.model_y, self.seeds.model_z]
    }

    /// Applies a command-line seed override: models get `seed`, `seed+1`,
    /// `seed+2` and shuffling gets `seed+3`.
    pub fn apply_seed_override(&mut self, seed: u64) {
        self.seeds.model_x = seed;
        self.seeds.model_y = seed.wrapping_add(1);
        self.seeds.model_z = seed.wrapping_add(2);
        self.seeds.shuffle = seed.wrapping_add(3);
    }

    /// Validates every section, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        self.constants
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        self.to_sim_config().validate()?;
        if self.dataset.sequence_length < 3 {
            return Err(Error::Config(format!(
                "dataset.sequence_length must be at least 3, got {}",
                self.dataset.sequence_length
            )));
        }
        let f = self.dataset.train_fraction;
        if !(f.is_finite() && 0.0 < f && f < 1.0) {
            return Err(Error::Config(format!(
                "dataset.train_fraction must lie strictly between 0 and 1, got {f}"
            )));
        }
        self.to_train_config()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }
}

/// Loads a run configuration for a command invocation.
///
/// With a path, the file must exist, parse, and validate; unknown keys
/// and out-of-domain values are usage errors. Without a path — or with a
/// path that does not exist — the built-in defaults are used only when
/// `allow_defaults` is set (a warning is printed to stderr), otherwise
/// the missing configuration is itself a usage error.
pub fn parse_config(path: Option<&Path>, allow_defaults: bool) -> Result<RunConfig> {
    let defaults_or_err = |reason: String| -> Result<RunConfig> {
        if allow_defaults {
            eprintln!("warning: {reason}; running with built-in defaults");
            Ok(RunConfig::default())
        } else {
            Err(Error::Config(format!(
                "{reason} (pass --allow-defaults to run with built-in defaults)"
            )))
        }
    };
    match path {
        None => defaults_or_err("no --config given".into()),
        Some(p) => match std::fs::read_to_string(p) {
            Ok(text) => {
                let cfg: RunConfig = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                cfg.validate()?;
                Ok(cfg)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                defaults_or_err(format!("config file {} not found", p.display()))
            }
            Err(e) => Err(Error::io(p, e)),
        },
    }
}
