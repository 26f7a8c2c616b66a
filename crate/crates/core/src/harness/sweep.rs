use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::profiles::{ProfileRegistry, ProfileSpec};
use crate::error::{Error, Result};
use crate::evolve::{run, Diagnostics, SimConfig, Verdict, DEFAULT_BLOWUP_THRESHOLD, DEFAULT_DECAY_EPSILON};
use crate::grid::GridSpec;

/// Environment variable capping the worker count.
pub const WORKERS_ENV: &str = "FWLAB_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub sigma_list: Vec<f64>,
    pub p_list: Vec<f64>,
    pub amplitude_list: Vec<f64>,
    /// Amplitude at which the critical exponent is bracketed; defaults to the
    /// first entry of `amplitude_list`.
    #[serde(default)]
    pub reference_amplitude: Option<f64>,
    #[serde(default)]
    pub profile: ProfileSpec,
    /// Require `∫u_1 > 0` in every cell.
    #[serde(default = "yes")]
    pub theorem_regime: bool,
    pub grid: GridSpec,
    #[serde(default = "one")]
    pub mu: f64,
    pub dt: f64,
    pub t_max: f64,
    #[serde(default = "default_cap")]
    pub blowup_threshold: f64,
    #[serde(default = "default_eps")]
    pub decay_epsilon: f64,
    #[serde(default = "one_usize")]
    pub workers: usize,
}

fn yes() -> bool {
    true
}
fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_cap() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}
fn default_eps() -> f64 {
    DEFAULT_DECAY_EPSILON
}

impl SweepPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, list) in [
            ("sigma_list", &self.sigma_list),
            ("p_list", &self.p_list),
            ("amplitude_list", &self.amplitude_list),
        ] {
            if list.is_empty() {
                return bad(format!("{name} is empty"));
            }
            if list.iter().any(|x| !x.is_finite()) {
                return bad(format!("{name} has a non-finite entry"));
            }
        }
        if let Some(s) = self.sigma_list.iter().find(|s| !(**s > 0.0 && **s <= 2.0)) {
            return bad(format!("sigma {s} outside (0, 2]"));
        }
        if let Some(p) = self.p_list.iter().find(|p| **p <= 1.0) {
            return bad(format!("p {p} must exceed 1"));
        }
        if let Some(a) = self.amplitude_list.iter().find(|a| **a <= 0.0) {
            return bad(format!("amplitude {a} must be positive"));
        }
        if let Some(a) = self.reference_amplitude {
            if !self.amplitude_list.contains(&a) {
                return bad(format!("reference amplitude {a} is not in amplitude_list"));
            }
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        let need = self.profile.support_radius() + self.t_max + 2.0;
        if self.grid.half_width() < need {
            return bad(format!(
                "box half-width {} is below data radius + t_max + 2 = {need}",
                self.grid.half_width()
            ));
        }
        ProfileRegistry::default().build(&self.profile)?;
        self.sim_config(self.sigma_list[0], self.p_list[0])?;
        Ok(())
    }

    pub fn reference(&self) -> f64 {
        self.reference_amplitude.unwrap_or(self.amplitude_list[0])
    }

    pub fn sim_config(&self, sigma: f64, p: f64) -> Result<SimConfig> {
        let mut cfg = SimConfig::new(self.grid, self.mu, sigma, p, self.dt, self.t_max)?;
        cfg.blowup_threshold = self.blowup_threshold;
        cfg.decay_epsilon = self.decay_epsilon;
        cfg.keep_snapshots = false;
        cfg.store_stride = (cfg.steps() / 100).max(1);
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the canonical JSON encoding of every plan field.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("plan serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Cells in deterministic `(σ, p, amplitude)` order.
    pub fn cells(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        for &s in &self.sigma_list {
            for &p in &self.p_list {
                for &a in &self.amplitude_list {
                    out.push((s, p, a));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub sigma: f64,
    pub p: f64,
    pub amplitude: f64,
    /// Absent when the run failed; the reason is in `error`.
    pub verdict: Option<Verdict>,
    pub t_star: Option<f64>,
    /// `t*` for blow-up, otherwise the integration horizon as a lower bound.
    pub lifespan: Option<f64>,
    pub mass: f64,
    pub diagnostics: Option<Diagnostics>,
    pub flags: Vec<String>,
    pub error: Option<String>,
}

impl Cell {
    pub fn verdict_label(&self) -> &'static str {
        self.verdict.as_ref().map_or("error", Verdict::label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub plan: SweepPlan,
    pub cells: Vec<Cell>,
}

/// Worker count after applying the environment cap.
pub fn effective_workers(requested: usize) -> usize {
    cap_workers(requested, std::env::var(WORKERS_ENV).ok().as_deref())
}

fn cap_workers(requested: usize, env: Option<&str>) -> usize {
    let cap = env
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&c| c > 0);
    cap.map_or(requested, |c| requested.min(c)).max(1)
}

fn run_cell(plan: &SweepPlan, sigma: f64, p: f64, amplitude: f64) -> Cell {
    let mut cell = Cell {
        sigma,
        p,
        amplitude,
        verdict: None,
        t_star: None,
        lifespan: None,
        mass: f64::NAN,
        diagnostics: None,
        flags: Vec::new(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let profile = ProfileRegistry::default().build(&plan.profile)?;
        let (u0, u1) = profile.initial_data(plan.grid, amplitude)?;
        cell.mass = u1.integrate();
        if plan.theorem_regime && !(cell.mass > 1e-12) {
            return Err(Error::InvalidConfig(format!(
                "theorem-regime cell has ∫u_1 = {} <= 1e-12",
                cell.mass
            )));
        }
        let cfg = plan.sim_config(sigma, p)?;
        let traj = run(&cfg, u0, u1)?;
        cell.verdict = Some(traj.verdict);
        cell.t_star = traj.verdict.t_star();
        cell.lifespan = Some(cell.t_star.unwrap_or(traj.horizon()));
        if cell.t_star.is_none() {
            cell.flags.push("lifespan_lower_bound".into());
        }
        cell.flags
            .extend(traj.diagnostics.flags().into_iter().map(String::from));
        cell.diagnostics = Some(traj.diagnostics);
        Ok(())
    })();
    if let Err(e) = outcome {
        cell.error = Some(e.to_string());
        cell.flags.push("run_failed".into());
    }
    cell
}

/// Runs every cell, concurrently up to the effective worker count. Failures
/// are recorded per cell.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepResult> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(plan.workers))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let cells = pool.install(|| {
        plan.cells()
            .par_iter()
            .map(|&(s, p, a)| run_cell(plan, s, p, a))
            .collect::<Vec<_>>()
    });
    Ok(SweepResult {
        plan: plan.clone(),
        cells,
    })
}

/// One CSV line per cell: `sigma,p,amplitude,verdict,t_star,lifespan,flags`.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from("sigma,p,amplitude,verdict,t_star,lifespan,flags\n");
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for c in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            c.sigma,
            c.p,
            c.amplitude,
            c.verdict_label(),
            opt(c.t_star),
            opt(c.lifespan),
            c.flags.join(";")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn small_plan() -> SweepPlan {
        SweepPlan {
            sigma_list: vec![1.0],
            p_list: vec![1.5],
            amplitude_list: vec![2.0],
            reference_amplitude: None,
            profile: ProfileSpec::default(),
            theorem_regime: true,
            grid: GridSpec::new(1, 32.0, 512).unwrap(),
            mu: 1.0,
            dt: 0.02,
            t_max: 20.0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
            decay_epsilon: DEFAULT_DECAY_EPSILON,
            workers: 2,
        }
    }

    #[test]
    fn empty_amplitudes_rejected() {
        let mut plan = small_plan();
        plan.amplitude_list.clear();
        assert!(matches!(plan.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn box_rule_enforced() {
        let mut plan = small_plan();
        plan.t_max = 40.0;
        assert!(plan.validate().is_err());
    }

    #[test]
    fn hash_tracks_every_field() {
        let base = small_plan();
        let h = base.config_hash();
        assert_eq!(h, small_plan().config_hash());
        let mut variants = Vec::new();
        let mut v = base.clone();
        v.sigma_list = vec![0.5];
        variants.push(v);
        let mut v = base.clone();
        v.p_list = vec![1.6];
        variants.push(v);
        let mut v = base.clone();
        v.amplitude_list = vec![2.5];
        variants.push(v);
        let mut v = base.clone();
        v.reference_amplitude = Some(2.0);
        variants.push(v);
        let mut v = base.clone();
        v.profile.radius = 1.5;
        variants.push(v);
        let mut v = base.clone();
        v.theorem_regime = false;
        variants.push(v);
        let mut v = base.clone();
        v.grid = GridSpec::new(1, 32.0, 1024).unwrap();
        variants.push(v);
        let mut v = base.clone();
        v.mu = 2.0;
        variants.push(v);
        let mut v = base.clone();
        v.dt = 0.01;
        variants.push(v);
        let mut v = base.clone();
        v.t_max = 10.0;
        variants.push(v);
        let mut v = base.clone();
        v.blowup_threshold = 1e9;
        variants.push(v);
        let mut v = base.clone();
        v.decay_epsilon = 1e-4;
        variants.push(v);
        let mut v = base.clone();
        v.workers = 3;
        variants.push(v);
        for v in variants {
            assert_ne!(v.config_hash(), h, "{v:?}");
        }
    }

    #[test]
    fn subcritical_cells_blow_up() {
        let mut plan = small_plan();
        plan.p_list = vec![1.2, 1.5];
        let res = run_sweep(&plan).unwrap();
        assert!(res.cells.iter().all(|c| c.t_star.is_some()), "{:?}", res.cells);
        let again = run_sweep(&plan).unwrap();
        assert_eq!(sweep_csv(&res), sweep_csv(&again));
    }

    #[test]
    fn failed_cells_are_recorded() {
        let mut plan = small_plan();
        // Past the blow-up cap from the start: the run itself is rejected.
        plan.blowup_threshold = 1.0;
        let res = run_sweep(&plan).unwrap();
        assert_eq!(res.cells[0].verdict_label(), "error");
        assert!(res.cells[0].error.is_some());
    }

    #[test]
    fn workers_env_caps() {
        assert_eq!(cap_workers(4, None), 4);
        assert_eq!(cap_workers(4, Some("2")), 2);
        assert_eq!(cap_workers(2, Some("8")), 2);
        assert_eq!(cap_workers(4, Some("zero")), 4);
        assert_eq!(cap_workers(4, Some("0")), 4);
    }
}
