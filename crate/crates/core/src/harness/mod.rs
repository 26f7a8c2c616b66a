//! Parameter sweeps, critical-exponent brackets, configuration and output
//! files.

pub mod config;
mod analysis;
mod lemmas;
mod output;
mod profiles;
mod sweep;

pub use analysis::{estimate_pc, lifespan_trend, monotonicity_anomalies, LifespanTrend, PcEstimate};
pub use config::FileConfig;
pub use lemmas::{run_lemma_checks, LemmaArgs, LemmaCheck, DOMINATION_TOLERANCE, RATE_TOLERANCE, SCALING_TOLERANCE};
pub use output::{emit, field_csv, norms_csv, read_field_csv, read_trajectory, write_solve, TOOL_VERSION};
pub use profiles::{unit_bump, Bump, DataProfile, ProfileRegistry, ProfileSpec, SignedU0};
pub use sweep::{effective_workers, run_sweep, sweep_csv, Cell, SweepPlan, SweepResult, WORKERS_ENV};
