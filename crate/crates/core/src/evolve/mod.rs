//! Pseudospectral integration of the structurally damped wave equation with
//! a `|u_t|^p` source, written as a first-order system in `(u, v = u_t)`.

mod config;
mod propagator;
mod solver;

pub use config::{SimConfig, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_DECAY_EPSILON};
pub use propagator::{linear_propagator, nonlinear_substep, Matrix2, Substep};
pub use solver::{
    data_radius, run, step, Diagnostics, NormSample, State, StepOutcome, Stepper, Trajectory,
    Verdict,
};
