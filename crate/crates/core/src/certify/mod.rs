//! Functionals of the test-function argument evaluated on computed
//! trajectories: `I_R`, its time- and space-restricted parts, `J_1..J_3`,
//! the weak identity they satisfy, and the predicted scaling in `R` and `K`.

mod chain;
mod functionals;
mod window;

pub use chain::{
    check_case2_k, check_rate_r, majorant_exponents, predicted_exponent, rate_chain, young_constant,
    young_margin, CaseTwoReport, KRow, MajorantRow, RateChainReport,
};
pub use functionals::{
    certify, check_weak_identity, compute_i, compute_j, phi_tail_mass, CertReport, IValues,
    JValues, TAIL_TOLERANCE,
};
pub use window::{coarse_weights, window_weights};
