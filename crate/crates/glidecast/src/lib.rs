//! Glide-vehicle trajectory simulation and next-position forecasting.
//!
//! `glidecast` couples two halves that share one data model:
//!
//! 1. **Simulation** ([`sim`]): a point-mass glide-vehicle flight model —
//!    inverse-square gravity, exponential atmosphere, drag and lift — is
//!    integrated with fixed-step explicit Euler to produce `(t, x, y, z)`
//!    trajectories, including out-of-plane paths via piecewise heading
//!    maneuvers.
//! 2. **Forecasting** ([`dataset`], [`nn`], [`model`], [`training`]): the
//!    trajectory becomes sliding-window sequences that feed three per-axis
//!    hybrid networks (a 1-D convolution branch, an LSTM branch, and a GRU
//!    branch concatenated into a dense head). Every layer, gradient, and
//!    optimizer step is implemented from first principles in this crate —
//!    no external ML framework — with correctness pinned by
//!    finite-difference and oracle tests.
//!
//! The crate is deliberately deterministic end to end: seeded ChaCha
//! streams drive every random choice, so a `(config, seed)` pair fixes
//! trained weights and metrics to the byte.
//!
//! # Quick start
//!
//! ```
//! use glidecast::sim::{simulate, PhysicalConstants, SimConfig};
//!
//! let cfg = SimConfig { t_total: 5.0, ..SimConfig::default() };
//! let traj = simulate(&cfg, &PhysicalConstants::default()).unwrap();
//! assert_eq!(traj.samples.first().map(|s| s.z), Some(80_000.0));
//! ```
//!
//! The `examples/` directory walks every major capability, and the
//! `glidecast` binary exposes the same pipeline as subcommands
//! (`simulate`, `make-dataset`, `train`, `evaluate`, `rollout`,
//! `plot-data`).

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod io;
pub mod model;
pub mod nn;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
