use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;
pub const DEFAULT_DECAY_EPSILON: f64 = 1e-3;

/// Physical and numerical parameters of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mu: f64,
    pub sigma: f64,
    pub p: f64,
    pub dt: f64,
    pub t_max: f64,
    /// Sup-norm cap on `v` beyond which the run is declared blown up.
    pub blowup_threshold: f64,
    /// Norms (and snapshots, when kept) are recorded every this many steps.
    pub store_stride: usize,
    pub grid: GridSpec,
    /// Drop the `|v|^p` source to integrate the linear damped wave only.
    pub nonlinear: bool,
    pub keep_snapshots: bool,
    pub decay_epsilon: f64,
}

impl SimConfig {
    pub fn new(grid: GridSpec, mu: f64, sigma: f64, p: f64, dt: f64, t_max: f64) -> Result<Self> {
        let cfg = Self {
            mu,
            sigma,
            p,
            dt,
            t_max,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            store_stride: 1,
            grid,
            nonlinear: true,
            keep_snapshots: true,
            decay_epsilon: DEFAULT_DECAY_EPSILON,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.sigma > 0.0 && self.sigma <= 2.0) {
            return bad(format!("sigma must lie in (0, 2], got {}", self.sigma));
        }
        if !(self.p > 1.0 && self.p.is_finite()) {
            return bad(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_max >= self.dt && self.t_max.is_finite()) {
            return bad(format!("t_max = {} is below dt = {}", self.t_max, self.dt));
        }
        if self.store_stride == 0 {
            return bad("store_stride must be at least 1".into());
        }
        if !(self.blowup_threshold > 0.0) {
            return bad("blowup_threshold must be positive".into());
        }
        if !(self.decay_epsilon > 0.0 && self.decay_epsilon < 1.0) {
            return bad(format!("decay_epsilon must lie in (0, 1), got {}", self.decay_epsilon));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil() as usize
    }

    /// Smallest half-width admitted by the unit-speed box rule.
    pub fn required_half_width(&self, data_radius: f64) -> f64 {
        data_radius + self.t_max + 2.0
    }
}
