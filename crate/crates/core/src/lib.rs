//! Numerical laboratory for the structurally damped semilinear wave equation
//! `u_tt - Δu + μ(-Δ)^{σ/2} u_t = |u_t|^p`.
//!
//! * [`grid`]: periodic lattices, fields, box quadrature and norms.
//! * [`fracop`]: the fractional Laplacian as a Fourier multiplier and as a
//!   principal-value quadrature, behind a name-keyed registry.
//! * [`testfn`]: the cutoffs `φ_R`, `η_R`, `Ψ_R` and numerical checks of
//!   their domination, scaling and rate properties.
//! * [`evolve`]: Strang-split pseudospectral solver with blow-up detection.
//! * [`certify`]: the weak-formulation functionals and their inequality chain
//!   evaluated on computed trajectories.
//! * [`harness`]: sweeps, critical-exponent brackets, config and output files.

pub mod certify;
pub mod error;
pub mod evolve;
pub mod fit;
pub mod fracop;
pub mod grid;
pub mod harness;
pub mod spectral;
pub mod testfn;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, Norm};
