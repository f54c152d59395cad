//! Point-mass glide-vehicle flight dynamics.
//!
//! The physical model treats the vehicle as an unpowered point mass flying
//! over a spherical, non-rotating Earth through an exponentially thinning
//! atmosphere:
//!
//! - gravitational acceleration `g(h) = G / (R + h)^2`,
//! - air density `rho(h) = rho0 * exp(-k * h)`,
//! - drag `Fd = 1/2 * Cd * rho * v^2 * A` opposing the velocity,
//! - lift `Fl = 1/2 * Cl * rho * v^2 * A` perpendicular to it.
//!
//! The state derivative couples those forces to the speed `v`, glide path
//! angle `theta` (negative while descending), and heading angle `phi`:
//!
//! ```text
//! dv/dt     = -Fd/m - g*sin(theta)
//! dtheta/dt =  Fl/(m*v) - g*cos(theta)/v
//! dphi/dt   =  supplied externally (maneuver schedule; 0 by default)
//! dx/dt     =  v*cos(theta)*cos(phi)
//! dy/dt     =  v*cos(theta)*sin(phi)
//! dz/dt     =  v*sin(theta)
//! ```
//!
//! All angles are radians, all arithmetic is `f64`. The `1/v` factor in the
//! path-angle rate makes low speeds singular; [`V_MIN`] guards it and the
//! integrator terminates rather than producing non-finite values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed floor (m/s) below which the path-angle rate is treated as
/// singular. Gliding flight never approaches it; reaching it aborts the
/// simulation loudly instead of emitting NaNs.
pub const V_MIN: f64 = 1e-3;

/// Physical constants of the vehicle and environment.
///
/// Defaults describe a 907 kg vehicle with a 0.88 m^2 reference area
/// gliding through a standard exponential atmosphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalConstants {
    /// Gravitational parameter G (m^3/s^2).
    pub grav_param: f64,
    /// Earth radius R (m).
    pub earth_radius: f64,
    /// Sea-level air density rho0 (kg/m^3).
    pub sea_level_density: f64,
    /// Density decay constant k (1/m).
    pub density_decay: f64,
    /// Reference cross-sectional area A (m^2).
    pub ref_area: f64,
    /// Vehicle mass m (kg).
    pub mass: f64,
    /// Drag coefficient Cd (dimensionless).
    pub drag_coeff: f64,
    /// Lift coefficient Cl (dimensionless).
    pub lift_coeff: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            grav_param: 3.98e14,
            earth_radius: 6_371_000.0,
            sea_level_density: 1.225,
            density_decay: 1.41e-4,
            ref_area: 0.88,
            mass: 907.0,
            drag_coeff: 0.5,
            lift_coeff: 0.7,
        }
    }
}

impl PhysicalConstants {
    /// Checks that every constant is strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("grav_param", self.grav_param),
            ("earth_radius", self.earth_radius),
            ("sea_level_density", self.sea_level_density),
            ("density_decay", self.density_decay),
            ("ref_area", self.ref_area),
            ("mass", self.mass),
            ("drag_coeff", self.drag_coeff),
            ("lift_coeff", self.lift_coeff),
        ];
        for (name, value) in fields {
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Config(format!(
                    "constants.{name} must be strictly positive and finite, got {value}"
                )));
            }
        }
        Ok(())
    }
}

/// Instantaneous kinematic state of the vehicle.
///
/// `z` is the altitude above sea level (the `h` fed to gravity and air
/// density); `x` and `y` are horizontal positions in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicState {
    /// Time since release (s).
    pub t: f64,
    /// Speed (m/s); must stay above [`V_MIN`].
    pub v: f64,
    /// Glide path angle (rad), negative while descending.
    pub theta: f64,
    /// Heading angle (rad).
    pub phi: f64,
    /// Downrange position (m).
    pub x: f64,
    /// Crossrange position (m).
    pub y: f64,
    /// Altitude (m).
    pub z: f64,
}

/// Forces and environment sampled at one `(v, h)` point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForcesSample {
    /// Gravitational acceleration (m/s^2).
    pub g: f64,
    /// Air density (kg/m^3).
    pub rho: f64,
    /// Drag force (N).
    pub drag: f64,
    /// Lift force (N).
    pub lift: f64,
}

/// Time derivative of every kinematic state component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    /// dv/dt (m/s^2).
    pub v_dot: f64,
    /// dtheta/dt (rad/s).
    pub theta_dot: f64,
    /// dphi/dt (rad/s), equal to the supplied maneuver rate.
    pub phi_dot: f64,
    /// dx/dt (m/s).
    pub x_dot: f64,
    /// dy/dt (m/s).
    pub y_dot: f64,
    /// dz/dt (m/s).
    pub z_dot: f64,
}

/// Gravitational acceleration at altitude `h` meters.
///
/// Inverse-square law: `G / (R + h)^2`, decreasing as altitude increases.
pub fn gravity_at(h: f64, c: &PhysicalConstants) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::InvalidInput(format!(
            "altitude must be finite, got {h}"
        )));
    }
    let r = c.earth_radius + h;
    if r <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "altitude {h} places the vehicle at or below the Earth's center"
        )));
    }
    Ok(c.grav_param / (r * r))
}

/// Air density at altitude `h` meters.
///
/// Exponential atmosphere: `rho0 * exp(-k * h)`.
pub fn air_density(h: f64, c: &PhysicalConstants) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::InvalidInput(format!(
            "altitude must be finite, got {h}"
        )));
    }
    Ok(c.sea_level_density * (-c.density_decay * h).exp())
}

/// Drag force (N) at speed `v` and altitude `h`: `1/2 * Cd * rho * v^2 * A`.
pub fn drag_force(v: f64, h: f64, c: &PhysicalConstants) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidInput(format!(
            "speed must be finite and non-negative, got {v}"
        )));
    }
    Ok(0.5 * c.drag_coeff * air_density(h, c)? * v * v * c.ref_area)
}

/// Lift force (N) at speed `v` and altitude `h`: `1/2 * Cl * rho * v^2 * A`.
pub fn lift_force(v: f64, h: f64, c: &PhysicalConstants) -> Result<f64> {
    if !v.is_finite() || v < 0.0 {
        return Err(Error::InvalidInput(format!(
            "speed must be finite and non-negative, got {v}"
        )));
    }
    Ok(0.5 * c.lift_coeff * air_density(h, c)? * v * v * c.ref_area)
}

/// Samples gravity, density, drag, and lift for one state point.
pub fn forces_at(v: f64, h: f64, c: &PhysicalConstants) -> Result<ForcesSample> {
    Ok(ForcesSample {
        g: gravity_at(h, c)?,
        rho: air_density(h, c)?,
        drag: drag_force(v, h, c)?,
        lift: lift_force(v, h, c)?,
    })
}

/// Evaluates the full state derivative at `s`.
///
/// `phi_rate` is the externally commanded heading rate (rad/s); pass 0 for
/// planar flight. Fails with [`Error::SingularSpeed`] when `s.v <= V_MIN`
/// because the path-angle rate divides by speed.
pub fn state_derivative(
    s: &KinematicState,
    c: &PhysicalConstants,
    phi_rate: f64,
) -> Result<StateDerivative> {
    if s.v <= V_MIN {
        return Err(Error::SingularSpeed {
            speed: s.v,
            minimum: V_MIN,
        });
    }
    let g = gravity_at(s.z, c)?;
    let drag = drag_force(s.v, s.z, c)?;
    let lift = lift_force(s.v, s.z, c)?;

    let (sin_theta, cos_theta) = s.theta.sin_cos();
    let (sin_phi, cos_phi) = s.phi.sin_cos();

    Ok(StateDerivative {
        v_dot: -drag / c.mass - g * sin_theta,
        theta_dot: lift / (c.mass * s.v) - g * cos_theta / s.v,
        phi_dot: phi_rate,
        x_dot: s.v * cos_theta * cos_phi,
        y_dot: s.v * cos_theta * sin_phi,
        z_dot: s.v * sin_theta,
    })
}
