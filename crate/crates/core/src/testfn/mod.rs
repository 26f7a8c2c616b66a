//! Cutoffs used to pair the equation with space-time test functions.

mod bernstein;
mod cutoff;
mod verify;

pub use bernstein::Bernstein;
pub use cutoff::{
    bracket, conjugate_exponent, sigma_bar, ScaledCutoff, SpatialCutoff, TemporalCutoff,
    TestFamily,
};
pub use verify::{
    eta_condition_constant, psi_pointwise_ratio, verify_lemma_domination, verify_lemma_rate,
    verify_lemma_scaling, weighted_rate_integral, DominationReport, RateReport, ScalingReport,
};
