use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use super::propagator::{linear_propagator, Matrix2, PowerFlow, Substep};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Norm};
use crate::spectral::{signed_index, SpectralPlan};

/// Boundary and spectral-tail levels above which a run is flagged.
const MONITOR_LEVEL: f64 = 1e-6;
const SHELL_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub t: f64,
}

impl State {
    pub fn new(u: Field, v: Field) -> Result<Self> {
        if u.spec() != v.spec() {
            return Err(Error::InvalidParameter("u and v live on different grids".into()));
        }
        Ok(Self { u, v, t: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    BlowUp { t_star: f64 },
    GlobalDecay,
    Inconclusive,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::BlowUp { .. } => "blow_up",
            Verdict::GlobalDecay => "global_decay",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn t_star(&self) -> Option<f64> {
        match *self {
            Verdict::BlowUp { t_star } => Some(t_star),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub t: f64,
    pub sup_v: f64,
    pub l2_v: f64,
    pub l2_u: f64,
    pub energy: f64,
    /// `∫ v dx`.
    pub mean_v: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: usize,
    pub data_radius: f64,
    /// Largest `sup_{outer shell} |v| / sup |v|` over recorded times.
    pub boundary_ratio: f64,
    /// Largest ratio of the top-third spectrum of `v` to its peak.
    pub spectral_tail: f64,
    pub boundary_contaminated: bool,
    pub under_resolved: bool,
}

impl Diagnostics {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.boundary_contaminated {
            out.push("boundary");
        }
        if self.under_resolved {
            out.push("under_resolved");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub times: Vec<f64>,
    pub u: Vec<Field>,
    pub v: Vec<Field>,
    pub norms: Vec<NormSample>,
    pub verdict: Verdict,
    pub diagnostics: Diagnostics,
}

impl Trajectory {
    pub fn grid(&self) -> &GridSpec {
        &self.config.grid
    }

    /// Last time for which the solution is known to be finite.
    pub fn horizon(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn has_snapshots(&self) -> bool {
        !self.v.is_empty()
    }
}

/// Result of one splitting step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepOutcome {
    Advanced,
    BlowUp { t_star: f64 },
}

/// Precomputed per-mode propagators and transform plan for one config.
pub struct Stepper {
    cfg: SimConfig,
    plan: SpectralPlan,
    propagators: Vec<Matrix2>,
    flow: PowerFlow,
    mirror: Vec<usize>,
    kappa_sq: Vec<f64>,
    high_modes: Vec<usize>,
    shell: Vec<usize>,
    buf: Vec<Complex64>,
    packed: Vec<Complex64>,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let plan = SpectralPlan::new(cfg.grid);
        let kappa_sq = plan.squared_moduli();
        let propagators = kappa_sq
            .iter()
            .map(|&k2| linear_propagator(k2.sqrt(), cfg.dt, cfg.mu, cfg.sigma))
            .collect();
        let mirror = (0..cfg.grid.len()).map(|i| plan.mirror_index(i)).collect();
        let n = cfg.grid.points_per_axis();
        let cut = (n / 2) as i64 * 2 / 3;
        let high = |j: usize| signed_index(j, n).abs() > cut;
        let high_modes = (0..cfg.grid.len())
            .filter(|&i| match cfg.grid.dim() {
                1 => high(i),
                _ => high(i / n) || high(i % n),
            })
            .collect();
        Ok(Self {
            shell: cfg.grid.outer_shell(SHELL_FRACTION),
            buf: vec![Complex64::new(0.0, 0.0); cfg.grid.len()],
            packed: vec![Complex64::new(0.0, 0.0); cfg.grid.len()],
            cfg: cfg.clone(),
            plan,
            propagators,
            flow: PowerFlow::new(cfg.p),
            mirror,
            kappa_sq,
            high_modes,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    fn nonlinear_half(&self, v: &mut Field, t: f64) -> Option<f64> {
        if !self.cfg.nonlinear {
            return None;
        }
        let half = 0.5 * self.cfg.dt;
        let mut earliest: Option<f64> = None;
        for x in v.values_mut() {
            match self.flow.advance(*x, half) {
                Substep::Value(y) => *x = y,
                Substep::BlowUp { after } => {
                    earliest = Some(earliest.map_or(after, |e: f64| e.min(after)));
                }
            }
        }
        earliest.map(|a| t + a)
    }

    /// Exact linear flow over `dt`. Both real fields share one complex
    /// transform, `z = u + i v`.
    fn linear_full(&mut self, state: &mut State) {
        for ((z, &u), &v) in self.buf.iter_mut().zip(state.u.values()).zip(state.v.values()) {
            *z = Complex64::new(u, v);
        }
        self.plan.forward_in_place(&mut self.buf);
        self.packed.copy_from_slice(&self.buf);
        let packed = &self.packed;
        let i = Complex64::new(0.0, 1.0);
        for (k, out) in self.buf.iter_mut().enumerate() {
            let (z, zm) = (packed[k], packed[self.mirror[k]].conj());
            let uh = 0.5 * (z + zm);
            let vh = -0.5 * i * (z - zm);
            let m = &self.propagators[k];
            let un = m[0][0] * uh + m[0][1] * vh;
            let vn = m[1][0] * uh + m[1][1] * vh;
            *out = un + i * vn;
        }
        self.plan.inverse_in_place(&mut self.buf);
        for ((z, u), v) in self
            .buf
            .iter()
            .zip(state.u.values_mut())
            .zip(state.v.values_mut())
        {
            *u = z.re;
            *v = z.im;
        }
    }

    /// One Strang step: half nonlinear, full linear, half nonlinear.
    pub fn step(&mut self, state: &mut State) -> Result<StepOutcome> {
        let t0 = state.t;
        let dt = self.cfg.dt;
        if let Some(t_star) = self.nonlinear_half(&mut state.v, t0) {
            return Ok(StepOutcome::BlowUp { t_star });
        }
        self.linear_full(state);
        if let Some(t_star) = self.nonlinear_half(&mut state.v, t0 + 0.5 * dt) {
            return Ok(StepOutcome::BlowUp { t_star });
        }
        if !(state.u.is_finite() && state.v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("step ending at t = {}", t0 + dt),
            });
        }
        state.t = t0 + dt;
        if state.v.sup() > self.cfg.blowup_threshold {
            return Ok(StepOutcome::BlowUp { t_star: state.t });
        }
        Ok(StepOutcome::Advanced)
    }

    /// Norms of the current state; the gradient part of the energy and the
    /// spectral tail come from one transform.
    fn measure(&self, state: &State) -> (NormSample, f64) {
        let spec = self.cfg.grid;
        let uh = self.plan.forward(&state.u);
        let vh = self.plan.forward(&state.v);
        let parseval = spec.cell_volume() / spec.len() as f64;
        let grad: f64 = uh
            .iter()
            .zip(&self.kappa_sq)
            .map(|(z, k2)| k2 * z.norm_sqr())
            .sum::<f64>()
            * parseval;
        let l2_v = state.v.norm(Norm::L2).expect("L2 is always defined");
        let peak = vh.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let tail = if peak > 0.0 {
            self.high_modes.iter().fold(0.0_f64, |m, &k| m.max(vh[k].norm())) / peak
        } else {
            0.0
        };
        let sample = NormSample {
            t: state.t,
            sup_v: state.v.sup(),
            l2_v,
            l2_u: state.u.norm(Norm::L2).expect("L2 is always defined"),
            energy: 0.5 * l2_v * l2_v + 0.5 * grad,
            mean_v: state.v.integrate(),
        };
        (sample, tail)
    }

    fn boundary_ratio(&self, v: &Field) -> f64 {
        let sup = v.sup();
        if sup == 0.0 {
            return 0.0;
        }
        let vals = v.values();
        self.shell.iter().fold(0.0_f64, |m, &i| m.max(vals[i].abs())) / sup
    }
}

/// Single Strang step with a freshly built [`Stepper`].
pub fn step(state: &State, cfg: &SimConfig) -> Result<(State, StepOutcome)> {
    let mut stepper = Stepper::new(cfg)?;
    let mut next = state.clone();
    let outcome = stepper.step(&mut next)?;
    Ok((next, outcome))
}

/// Radius of the smallest centred ball outside which both fields vanish.
pub fn data_radius(u0: &Field, u1: &Field) -> f64 {
    let spec = u0.spec();
    let scale = u0.sup().max(u1.sup());
    if scale == 0.0 {
        return 0.0;
    }
    let cut = 1e-14 * scale;
    (0..spec.len())
        .filter(|&i| u0.values()[i].abs() > cut || u1.values()[i].abs() > cut)
        .map(|i| spec.radius(i))
        .fold(0.0, f64::max)
}

pub fn run(cfg: &SimConfig, u0: Field, u1: Field) -> Result<Trajectory> {
    cfg.validate()?;
    if u0.spec() != &cfg.grid || u1.spec() != &cfg.grid {
        return Err(Error::InvalidConfig("initial data are not on the configured grid".into()));
    }
    if !(u0.is_finite() && u1.is_finite()) {
        return Err(Error::NonFinite {
            context: "initial data".into(),
        });
    }
    let radius = data_radius(&u0, &u1);
    let need = cfg.required_half_width(radius);
    if cfg.grid.half_width() < need {
        return Err(Error::InvalidConfig(format!(
            "box half-width {} is below data radius + t_max + 2 = {need}",
            cfg.grid.half_width()
        )));
    }
    let initial_sup = u1.sup();
    if cfg.blowup_threshold <= initial_sup {
        return Err(Error::InvalidConfig(format!(
            "blow-up threshold {} does not exceed the initial sup |u_t| = {initial_sup}",
            cfg.blowup_threshold
        )));
    }

    let mut stepper = Stepper::new(cfg)?;
    let mut state = State::new(u0, u1)?;
    let steps = cfg.steps();
    let decay_from = 0.9 * cfg.t_max;
    let decay_level = cfg.decay_epsilon * initial_sup;
    let mut decayed = true;

    let mut traj = Trajectory {
        config: cfg.clone(),
        times: Vec::new(),
        u: Vec::new(),
        v: Vec::new(),
        norms: Vec::new(),
        verdict: Verdict::Inconclusive,
        diagnostics: Diagnostics {
            data_radius: radius,
            ..Diagnostics::default()
        },
    };
    let record = |traj: &mut Trajectory, state: &State, stepper: &Stepper| {
        let (sample, tail) = stepper.measure(state);
        let d = &mut traj.diagnostics;
        d.spectral_tail = d.spectral_tail.max(tail);
        d.boundary_ratio = d.boundary_ratio.max(stepper.boundary_ratio(&state.v));
        traj.times.push(state.t);
        traj.norms.push(sample);
        if cfg.keep_snapshots {
            traj.u.push(state.u.clone());
            traj.v.push(state.v.clone());
        }
    };
    record(&mut traj, &state, &stepper);

    let mut verdict = None;
    for k in 1..=steps {
        let last = state.clone();
        match stepper.step(&mut state)? {
            StepOutcome::BlowUp { t_star } => {
                if traj.times.last() != Some(&last.t) {
                    record(&mut traj, &last, &stepper);
                }
                traj.diagnostics.steps = k - 1;
                verdict = Some(Verdict::BlowUp { t_star });
                break;
            }
            StepOutcome::Advanced => {
                // Re-anchor the clock on the lattice of step times.
                state.t = k as f64 * cfg.dt;
                if state.t >= decay_from && !(state.v.sup() < decay_level) {
                    decayed = false;
                }
                if k % cfg.store_stride == 0 || k == steps {
                    record(&mut traj, &state, &stepper);
                }
            }
        }
    }
    let verdict = verdict.unwrap_or_else(|| {
        traj.diagnostics.steps = steps;
        if decayed {
            Verdict::GlobalDecay
        } else {
            Verdict::Inconclusive
        }
    });
    traj.verdict = verdict;
    let d = &mut traj.diagnostics;
    d.boundary_contaminated = d.boundary_ratio >= MONITOR_LEVEL;
    d.under_resolved = d.spectral_tail > MONITOR_LEVEL;
    Ok(traj)
}
