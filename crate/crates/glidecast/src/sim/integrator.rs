//! Fixed-step explicit-Euler trajectory integration.
//!
//! [`simulate`] advances a [`KinematicState`] with first-order explicit
//! Euler steps — every state component moves by `derivative * dt` — and
//! records a `(t, x, y, z)` sample at release and after each step. The run
//! stops at the first of three events, recorded in the trajectory:
//!
//! - the configured time horizon is reached,
//! - the altitude drops to or below zero (ground impact; the first
//!   non-positive-altitude sample is kept),
//! - the speed falls to the singular-speed guard.
//!
//! Explicit Euler is deliberate: it is the minimal fixed-step scheme, its
//! first-order convergence is verified by the test suite, and nothing in
//! the model calls for higher-order machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::dynamics::{
    state_derivative, KinematicState, PhysicalConstants, StateDerivative, V_MIN,
};

/// One piecewise-constant heading-rate segment of a maneuver schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSegment {
    /// Segment start time (s), inclusive.
    pub t_start: f64,
    /// Segment end time (s), exclusive.
    pub t_end: f64,
    /// Commanded heading rate over the segment (deg/s in configuration
    /// files; converted to rad/s at load time like all angles).
    pub phi_rate: f64,
}

/// Piecewise-constant heading-rate schedule; empty means planar flight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ManeuverSchedule {
    /// Time-sorted, non-overlapping segments.
    pub segments: Vec<ManeuverSegment>,
}

impl ManeuverSchedule {
    /// A schedule with no segments: the heading never changes.
    pub fn empty() -> Self {
        ManeuverSchedule::default()
    }

    /// Heading rate (rad/s) commanded at time `t`; 0 outside all segments.
    pub fn phi_rate_at(&self, t: f64) -> f64 {
        for seg in &self.segments {
            if t >= seg.t_start && t < seg.t_end {
                return seg.phi_rate;
            }
        }
        0.0
    }

    /// Checks segment ordering, disjointness, and finiteness.
    pub fn validate(&self) -> Result<()> {
        let mut prev_end = f64::NEG_INFINITY;
        for (i, seg) in self.segments.iter().enumerate() {
            if !seg.t_start.is_finite() || !seg.t_end.is_finite() || !seg.phi_rate.is_finite() {
                return Err(Error::Config(format!(
                    "maneuver segment {i} has non-finite fields"
                )));
            }
            if seg.t_end <= seg.t_start {
                return Err(Error::Config(format!(
                    "maneuver segment {i} must have t_end > t_start, got [{}, {})",
                    seg.t_start, seg.t_end
                )));
            }
            if seg.t_start < prev_end {
                return Err(Error::Config(format!(
                    "maneuver segment {i} overlaps the previous segment (starts at {} before {})",
                    seg.t_start, prev_end
                )));
            }
            prev_end = seg.t_end;
        }
        Ok(())
    }
}

/// Simulation configuration: timestep, horizon, and initial conditions.
///
/// Angles are radians here; configuration files accept degrees and convert
/// once at load time.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Integration timestep dt (s).
    pub dt: f64,
    /// Total simulated time horizon (s).
    pub t_total: f64,
    /// Initial speed v0 (m/s).
    pub v0: f64,
    /// Initial altitude h0 (m).
    pub h0: f64,
    /// Initial glide path angle theta0 (rad).
    pub theta0: f64,
    /// Initial heading angle phi0 (rad).
    pub phi0: f64,
    /// Heading-rate schedule; empty for planar flight.
    pub maneuver: ManeuverSchedule,
}

impl Default for SimConfig {
    /// Release at 80 km altitude and 5100 m/s on a -5 degree glide path,
    /// integrated at 0.1 s steps for 300 s.
    fn default() -> Self {
        SimConfig {
            dt: 0.1,
            t_total: 300.0,
            v0: 5100.0,
            h0: 80_000.0,
            theta0: (-5.0_f64).to_radians(),
            phi0: 0.0,
            maneuver: ManeuverSchedule::empty(),
        }
    }
}

impl SimConfig {
    /// Validates timestep, horizon, speed, and the maneuver schedule.
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::Config(format!(
                "sim.dt must be strictly positive and finite, got {}",
                self.dt
            )));
        }
        if !self.t_total.is_finite() || self.t_total < 0.0 {
            return Err(Error::Config(format!(
                "sim.t_total must be non-negative and finite, got {}",
                self.t_total
            )));
        }
        if !self.v0.is_finite() || self.v0 <= V_MIN {
            return Err(Error::Config(format!(
                "sim.v0 must be finite and above the singular-speed guard {V_MIN}, got {}",
                self.v0
            )));
        }
        for (name, value) in [
            ("h0", self.h0),
            ("theta0", self.theta0),
            ("phi0", self.phi0),
        ] {
            if !value.is_finite() {
                return Err(Error::Config(format!(
                    "sim.{name} must be finite, got {value}"
                )));
            }
        }
        self.maneuver.validate()
    }

    /// Initial kinematic state at t = 0.
    pub fn initial_state(&self) -> KinematicState {
        KinematicState {
            t: 0.0,
            v: self.v0,
            theta: self.theta0,
            phi: self.phi0,
            x: 0.0,
            y: 0.0,
            z: self.h0,
        }
    }
}

/// Why a simulation stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    /// The configured horizon was reached.
    TimeLimit,
    /// Altitude dropped to or below zero; the impact sample is kept.
    GroundImpact,
    /// Speed fell to the singular-speed guard.
    SingularSpeed,
}

impl std::fmt::Display for TerminationReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TerminationReason::TimeLimit => "time-limit",
            TerminationReason::GroundImpact => "ground-impact",
            TerminationReason::SingularSpeed => "singular-speed",
        })
    }
}

/// One recorded trajectory sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    /// Time (s).
    pub t: f64,
    /// Downrange position (m).
    pub x: f64,
    /// Crossrange position (m).
    pub y: f64,
    /// Altitude (m).
    pub z: f64,
}

/// A recorded flight path: position samples plus the full states behind
/// them and the reason integration stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Time-ordered `(t, x, y, z)` samples, one per integration step plus
    /// the release point.
    pub samples: Vec<TrajectorySample>,
    /// Full kinematic states parallel to `samples` (kept for diagnostics
    /// and convergence tests; exports carry only the samples).
    pub states: Vec<KinematicState>,
    /// Why the run stopped.
    pub termination: TerminationReason,
}

impl Trajectory {
    /// Number of recorded samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when no samples were recorded (never produced by `simulate`).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Advances the state by one explicit-Euler step of length `dt`.
///
/// Every component moves by `dt` times its derivative; time advances by
/// exactly `dt`. Propagates the singular-speed error from the derivative
/// evaluation.
pub fn euler_step(
    s: &KinematicState,
    c: &PhysicalConstants,
    phi_rate: f64,
    dt: f64,
) -> Result<KinematicState> {
    if !dt.is_finite() || dt < 0.0 {
        return Err(Error::InvalidInput(format!(
            "timestep must be finite and non-negative, got {dt}"
        )));
    }
    let d: StateDerivative = state_derivative(s, c, phi_rate)?;
    Ok(KinematicState {
        t: s.t + dt,
        v: s.v + d.v_dot * dt,
        theta: s.theta + d.theta_dot * dt,
        phi: s.phi + d.phi_dot * dt,
        x: s.x + d.x_dot * dt,
        y: s.y + d.y_dot * dt,
        z: s.z + d.z_dot * dt,
    })
}

/// Runs the full fixed-step integration described by `cfg`.
///
/// Records the release state and one sample per step until the horizon,
/// ground impact, or singular speed ends the run. The number of samples is
/// at most `floor(t_total/dt) + 1`, and sample `k` sits at exactly
/// `k * dt` — times are recomputed from the step index, not accumulated.
pub fn simulate(cfg: &SimConfig, c: &PhysicalConstants) -> Result<Trajectory> {
    cfg.validate()?;
    c.validate()?;

    let mut state = cfg.initial_state();
    let mut samples = Vec::new();
    let mut states = Vec::new();
    let record = |samples: &mut Vec<TrajectorySample>,
                  states: &mut Vec<KinematicState>,
                  s: &KinematicState| {
        samples.push(TrajectorySample {
            t: s.t,
            x: s.x,
            y: s.y,
            z: s.z,
        });
        states.push(*s);
    };
    record(&mut samples, &mut states, &state);

    // Number of whole steps in the horizon. The small bias absorbs
    // division artifacts: 300.0 / 0.1 lands a hair below 3000 in floating
    // point, and without it the canonical run would lose its last step.
    let n_steps = (cfg.t_total / cfg.dt + 1e-9).floor() as u64;

    let mut termination = TerminationReason::TimeLimit;
    for k in 0..n_steps {
        if state.z <= 0.0 {
            termination = TerminationReason::GroundImpact;
            break;
        }
        if state.v <= V_MIN {
            termination = TerminationReason::SingularSpeed;
            break;
        }
        let phi_rate = cfg.maneuver.phi_rate_at(state.t);
        state = euler_step(&state, c, phi_rate, cfg.dt)?;
        // Pin time to the step grid rather than accumulating dt: repeated
        // addition drifts by an ulp per step, which after thousands of
        // steps can land a sample on the wrong side of a maneuver-segment
        // boundary set at an exact multiple of dt.
        state.t = (k + 1) as f64 * cfg.dt;
        record(&mut samples, &mut states, &state);
    }
    // Classify a run that exhausted the horizon but ended on a terminal
    // sample, so callers see the physically meaningful reason.
    if termination == TerminationReason::TimeLimit {
        if state.z <= 0.0 {
            termination = TerminationReason::GroundImpact;
        } else if state.v <= V_MIN {
            termination = TerminationReason::SingularSpeed;
        }
    }

    Ok(Trajectory {
        samples,
        states,
        termination,
    })
}
