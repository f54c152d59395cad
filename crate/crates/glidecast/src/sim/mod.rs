//! Flight simulation: point-mass glide dynamics and the fixed-step
//! explicit-Euler integrator that records trajectories.

pub mod dynamics;
pub mod integrator;

pub use dynamics::{
    air_density, drag_force, forces_at, gravity_at, lift_force, state_derivative, ForcesSample,
    KinematicState, PhysicalConstants, StateDerivative, V_MIN,
};
pub use integrator::{
    euler_step, simulate, ManeuverSchedule, ManeuverSegment, SimConfig, TerminationReason,
    Trajectory, TrajectorySample,
};
