use std::collections::BTreeMap;

use serde::Serialize;

use super::window::{coarse_weights, window_weights};
use crate::error::{Error, Result};
use crate::evolve::{Trajectory, Verdict};
use crate::fracop::FracSpectral;
use crate::grid::{Field, GridSpec};
use crate::testfn::{SpatialCutoff, TestFamily};

/// Shell used to bound the solution outside the truncated box.
const SHELL_FRACTION: f64 = 0.05;
/// Largest admissible ratio of a tail bound to its integral.
pub const TAIL_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IValues {
    pub i_r: f64,
    pub i_rt: f64,
    pub i_rx: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JValues {
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertReport {
    pub r: f64,
    pub k: f64,
    pub i_r: f64,
    pub i_rt: f64,
    pub i_rx: f64,
    pub j1: f64,
    pub j2: f64,
    pub j3: f64,
    pub identity_residual: f64,
    /// `∫ u_1 φ_R`.
    pub u1_pairing: f64,
    /// `∫ u_0 Ψ_R(0) Δφ_R`.
    pub u0_term: f64,
    pub tail_bounds: BTreeMap<String, f64>,
    /// Richardson estimates of the time-quadrature error (stride vs 2·stride).
    pub time_errors: BTreeMap<String, f64>,
    pub fitted_rates: BTreeMap<String, f64>,
    /// Tails within [`TAIL_TOLERANCE`] and time error below 1%.
    pub certified: bool,
}

/// Spatial factors of the test function sampled on the run grid. The
/// Laplacian is the closed form; the fractional power goes through the
/// solver's own Fourier multiplier.
pub(crate) struct SpatialFactors {
    pub phi: Field,
    pub lap: Field,
    pub frac: Field,
    pub outer: Vec<bool>,
}

impl SpatialFactors {
    pub fn new(fam: &TestFamily, grid: GridSpec) -> Result<Self> {
        let phi = fam.phi_r_field(grid)?;
        let lap = fam.laplacian_phi_r_field(grid)?;
        let frac = FracSpectral::new(grid, fam.sigma)?.apply(&phi)?;
        let scale = fam.spatial_scale();
        let outer = (0..grid.len()).map(|i| grid.radius(i) >= scale).collect();
        Ok(Self {
            phi,
            lap,
            frac,
            outer,
        })
    }
}

/// Spatial integrals of each stored `v` snapshot against the test factors.
#[derive(Default)]
pub(crate) struct SnapshotSums {
    pub power: Vec<f64>,
    pub power_outer: Vec<f64>,
    pub phi: Vec<f64>,
    pub lap_outer: Vec<f64>,
    pub frac: Vec<f64>,
    pub shell_sup: Vec<f64>,
}

impl SnapshotSums {
    pub fn new(traj: &Trajectory, factors: &SpatialFactors, p: f64) -> Self {
        let grid = traj.grid();
        let h = grid.cell_volume();
        let shell = grid.outer_shell(SHELL_FRACTION);
        let phi = factors.phi.values();
        let lap = factors.lap.values();
        let frac = factors.frac.values();
        let mut out = Self::default();
        for v in &traj.v {
            let vals = v.values();
            let (mut a, mut ao, mut b1, mut b2, mut b3) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..vals.len() {
                let x = vals[i];
                let w = x.abs().powf(p) * phi[i];
                a += w;
                b1 += x * phi[i];
                b3 += x * frac[i];
                if factors.outer[i] {
                    ao += w;
                    b2 += x * lap[i];
                }
            }
            out.power.push(h * a);
            out.power_outer.push(h * ao);
            out.phi.push(h * b1);
            out.lap_outer.push(h * b2);
            out.frac.push(h * b3);
            out.shell_sup.push(shell.iter().fold(0.0_f64, |m, &i| m.max(vals[i].abs())));
        }
        out
    }
}

pub(crate) fn check_window(traj: &Trajectory, fam: &TestFamily) -> Result<()> {
    let top = fam.horizon();
    if !traj.has_snapshots() {
        return Err(Error::Window("trajectory carries no field snapshots".into()));
    }
    if fam.n != traj.grid().dim() {
        return Err(Error::Window(format!(
            "test family dimension {} differs from grid dimension {}",
            fam.n,
            traj.grid().dim()
        )));
    }
    if let Verdict::BlowUp { t_star } = traj.verdict {
        if t_star <= top {
            return Err(Error::Window(format!(
                "blow-up at t* = {t_star} precedes R^σ̄ = {top}"
            )));
        }
    }
    if traj.horizon() < top * (1.0 - 1e-12) {
        return Err(Error::Window(format!(
            "trajectory ends at {} before R^σ̄ = {top}",
            traj.horizon()
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Time profiles and weights of one test family on a trajectory's clock.
pub(crate) struct TimeFactors {
    pub full: Vec<f64>,
    pub late: Vec<f64>,
    pub full_coarse: Vec<f64>,
    pub late_coarse: Vec<f64>,
    pub eta: Vec<f64>,
    pub eta_prime: Vec<f64>,
    pub psi: Vec<f64>,
}

impl TimeFactors {
    pub fn new(times: &[f64], fam: &TestFamily) -> Self {
        let top = fam.horizon();
        Self {
            full: window_weights(times, 0.0, top),
            late: window_weights(times, 0.5 * top, top),
            full_coarse: coarse_weights(times, 0.0, top, 2),
            late_coarse: coarse_weights(times, 0.5 * top, top, 2),
            eta: times.iter().map(|&t| fam.eta_r(t)).collect(),
            eta_prime: times.iter().map(|&t| fam.eta_r_prime(t)).collect(),
            psi: times.iter().map(|&t| fam.psi_r(t)).collect(),
        }
    }

    /// `Σ w_i f_i g_i`.
    pub fn integrate(w: &[f64], f: &[f64], g: &[f64]) -> f64 {
        w.iter().zip(f).zip(g).map(|((w, f), g)| w * f * g).sum()
    }
}

struct Evaluation {
    i: IValues,
    j: JValues,
    coarse_i: IValues,
    coarse_j: JValues,
}

fn evaluate(time: &TimeFactors, sums: &SnapshotSums, mu: f64) -> Evaluation {
    let pick = |full: &[f64], late: &[f64]| {
        (
            IValues {
                i_r: TimeFactors::integrate(full, &time.eta, &sums.power),
                i_rt: TimeFactors::integrate(late, &time.eta, &sums.power),
                i_rx: TimeFactors::integrate(full, &time.eta, &sums.power_outer),
            },
            JValues {
                j1: TimeFactors::integrate(late, &time.eta_prime, &sums.phi),
                j2: TimeFactors::integrate(full, &time.psi, &sums.lap_outer),
                j3: mu * TimeFactors::integrate(full, &time.eta, &sums.frac),
            },
        )
    };
    let (i, j) = pick(&time.full, &time.late);
    let (coarse_i, coarse_j) = pick(&time.full_coarse, &time.late_coarse);
    Evaluation {
        i,
        j,
        coarse_i,
        coarse_j,
    }
}

pub fn compute_i(traj: &Trajectory, fam: &TestFamily) -> Result<IValues> {
    check_window(traj, fam)?;
    let factors = SpatialFactors::new(fam, *traj.grid())?;
    let sums = SnapshotSums::new(traj, &factors, fam.p);
    let time = TimeFactors::new(&traj.times, fam);
    Ok(evaluate(&time, &sums, traj.config.mu).i)
}

pub fn compute_j(traj: &Trajectory, fam: &TestFamily) -> Result<JValues> {
    check_window(traj, fam)?;
    let factors = SpatialFactors::new(fam, *traj.grid())?;
    let sums = SnapshotSums::new(traj, &factors, fam.p);
    let time = TimeFactors::new(&traj.times, fam);
    Ok(evaluate(&time, &sums, traj.config.mu).j)
}

/// `ρ^n ∫_{|y| > L/ρ} <y>^{-n-2s} dy`, bounded with `<y> >= |y| - 1`;
/// infinite when the box does not reach twice the plateau radius.
pub fn phi_tail_mass(n: usize, s: f64, rho: f64, half_width: f64) -> f64 {
    let a = half_width / rho;
    if a <= 2.0 {
        return f64::INFINITY;
    }
    let d = a - 1.0;
    match n {
        1 => 2.0 * rho * d.powf(-2.0 * s) / (2.0 * s),
        _ => {
            2.0 * std::f64::consts::PI
                * rho
                * rho
                * (d.powf(-2.0 * s) / (2.0 * s) + d.powf(-1.0 - 2.0 * s) / (1.0 + 2.0 * s))
        }
    }
}

/// `sup_{r >= 1} |Δφ| / φ` for the unit cutoff, from dense radial sampling.
pub(crate) fn laplacian_ratio(cutoff: &SpatialCutoff) -> f64 {
    (0..200_000)
        .map(|i| 1.0 + i as f64 * 5e-4)
        .map(|r| {
            let mut x = vec![0.0; cutoff.dim()];
            x[0] = r;
            cutoff.laplacian(&x).abs() / cutoff.phi(&x)
        })
        .fold(0.0, f64::max)
}

fn residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / (lhs.abs() + rhs.abs() + f64::EPSILON)
}

/// `(∫ u_1 φ_R, ∫ u_0 Ψ_R(0) Δφ_R)`.
fn data_terms(factors: &SpatialFactors, fam: &TestFamily, u0: &Field, u1: &Field) -> (f64, f64) {
    let h = u0.spec().cell_volume();
    let pairing = h * dot(u1.values(), factors.phi.values());
    let u0_term = h * fam.psi_r(0.0) * dot(u0.values(), factors.lap.values());
    (pairing, u0_term)
}

/// Relative imbalance of `I_R + ∫u_1φ_R + ∫u_0Ψ_R(0)Δφ_R = -J_1 - J_2 + J_3`.
pub fn check_weak_identity(
    traj: &Trajectory,
    fam: &TestFamily,
    u0: &Field,
    u1: &Field,
) -> Result<f64> {
    Ok(certify(traj, fam, u0, u1)?.identity_residual)
}

/// All functionals, the identity residual, tail bounds and time errors for
/// one `(R, K)`.
pub fn certify(traj: &Trajectory, fam: &TestFamily, u0: &Field, u1: &Field) -> Result<CertReport> {
    check_window(traj, fam)?;
    let grid = *traj.grid();
    if u0.spec() != &grid || u1.spec() != &grid {
        return Err(Error::InvalidParameter("initial data are not on the trajectory grid".into()));
    }
    let factors = SpatialFactors::new(fam, grid)?;
    let sums = SnapshotSums::new(traj, &factors, fam.p);
    let time = TimeFactors::new(&traj.times, fam);
    let mu = traj.config.mu;
    let Evaluation {
        i,
        j,
        coarse_i,
        coarse_j,
    } = evaluate(&time, &sums, mu);
    let (u1_pairing, u0_term) = data_terms(&factors, fam, u0, u1);
    let lhs = i.i_r + u1_pairing + u0_term;
    let rhs = -j.j1 - j.j2 + j.j3;
    let identity_residual = residual(lhs, rhs);

    // Out-of-box tails: |v| beyond the box is bounded by its shell maximum.
    let scale = fam.spatial_scale();
    let mass = phi_tail_mass(fam.n, fam.sigma / 2.0, scale, grid.half_width());
    let lap_tail = laplacian_ratio(&fam.spatial) / (scale * scale) * mass;
    let frac_ratio = domination_on_grid(&factors, grid);
    let frac_tail = frac_ratio * mass;
    let shell_p: Vec<f64> = sums.shell_sup.iter().map(|s| s.powf(fam.p)).collect();
    let abs_eta_prime: Vec<f64> = time.eta_prime.iter().map(|x| x.abs()).collect();
    let mut tail_bounds: BTreeMap<String, f64> = BTreeMap::new();
    tail_bounds.insert("I_R".into(), mass * TimeFactors::integrate(&time.full, &time.eta, &shell_p));
    tail_bounds.insert("I_Rt".into(), mass * TimeFactors::integrate(&time.late, &time.eta, &shell_p));
    tail_bounds.insert("I_Rx".into(), mass * TimeFactors::integrate(&time.full, &time.eta, &shell_p));
    tail_bounds.insert(
        "J1".into(),
        mass * TimeFactors::integrate(&time.late, &abs_eta_prime, &sums.shell_sup),
    );
    tail_bounds.insert(
        "J2".into(),
        lap_tail * TimeFactors::integrate(&time.full, &time.psi, &sums.shell_sup),
    );
    tail_bounds.insert(
        "J3".into(),
        mu * frac_tail * TimeFactors::integrate(&time.full, &time.eta, &sums.shell_sup),
    );

    let richardson = |a: f64, b: f64| (a - b).abs() / 3.0;
    let mut time_errors = BTreeMap::new();
    time_errors.insert("I_R".to_string(), richardson(i.i_r, coarse_i.i_r));
    time_errors.insert("I_Rt".to_string(), richardson(i.i_rt, coarse_i.i_rt));
    time_errors.insert("I_Rx".to_string(), richardson(i.i_rx, coarse_i.i_rx));
    time_errors.insert("J1".to_string(), richardson(j.j1, coarse_j.j1));
    time_errors.insert("J2".to_string(), richardson(j.j2, coarse_j.j2));
    time_errors.insert("J3".to_string(), richardson(j.j3, coarse_j.j3));

    let values: BTreeMap<&str, f64> = [
        ("I_R", i.i_r),
        ("I_Rt", i.i_rt),
        ("I_Rx", i.i_rx),
        ("J1", j.j1),
        ("J2", j.j2),
        ("J3", j.j3),
    ]
    .into_iter()
    .collect();
    let magnitude = i.i_r.abs() + j.j1.abs() + j.j2.abs() + j.j3.abs();
    let tails_ok = tail_bounds
        .iter()
        .all(|(k, b)| *b <= TAIL_TOLERANCE * values[k.as_str()].abs() || *b == 0.0);
    let time_ok = time_errors.values().all(|e| *e <= 0.01 * magnitude);

    let report = CertReport {
        r: fam.r,
        k: fam.k,
        i_r: i.i_r,
        i_rt: i.i_rt,
        i_rx: i.i_rx,
        j1: j.j1,
        j2: j.j2,
        j3: j.j3,
        identity_residual,
        u1_pairing,
        u0_term,
        tail_bounds,
        time_errors,
        fitted_rates: BTreeMap::new(),
        certified: tails_ok && time_ok,
    };
    let finite = [lhs, rhs, i.i_r, i.i_rt, i.i_rx].iter().all(|x| x.is_finite());
    if !finite {
        return Err(Error::NonFinite {
            context: format!("functionals at R = {}", fam.r),
        });
    }
    Ok(report)
}

/// `max |(-Δ)^{σ/2} φ_R| / φ_R` over the inner half of the box.
fn domination_on_grid(factors: &SpatialFactors, grid: GridSpec) -> f64 {
    let inner = 0.5 * grid.half_width();
    (0..grid.len())
        .filter(|&i| grid.radius(i) <= inner)
        .map(|i| factors.frac.values()[i].abs() / factors.phi.values()[i])
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::synthetic::trajectory;
    use super::*;
    use crate::evolve::{run, SimConfig};
    use crate::fracop::{gauss_legendre, FracQuadrature, QuadratureSettings};
    use crate::harness::unit_bump;

    fn grid() -> GridSpec {
        GridSpec::new(1, 64.0, 1024).unwrap()
    }

    #[test]
    fn zero_trajectory_gives_zeros() {
        let traj = trajectory(grid(), 1.0, 1.5, 0.1, 8.0, |_, _| 0.0);
        let fam = TestFamily::new(1, 1.0, 1.5, 8.0, 1.0).unwrap();
        let i = compute_i(&traj, &fam).unwrap();
        let j = compute_j(&traj, &fam).unwrap();
        assert_eq!((i.i_r, i.i_rt, i.i_rx), (0.0, 0.0, 0.0));
        assert_eq!((j.j1, j.j2, j.j3), (0.0, 0.0, 0.0));
        let z = Field::zeros(grid());
        assert_eq!(check_weak_identity(&traj, &fam, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn inner_support_has_no_outer_part() {
        let traj = trajectory(grid(), 1.0, 1.5, 0.1, 4.0, |t, x| {
            if x[0].abs() < 3.0 {
                1.0 + t
            } else {
                0.0
            }
        });
        let fam = TestFamily::new(1, 0.5, 1.5, 16.0, 1.0).unwrap();
        let i = compute_i(&traj, &fam).unwrap();
        assert!(i.i_r > 0.0);
        assert_eq!(i.i_rx, 0.0);
    }

    #[test]
    fn constant_block_integrates_by_hand() {
        let (r, c, p, dt) = (8.0, 0.7_f64, 1.5, 0.01);
        let fam = TestFamily::new(1, 1.0, p, r, 1.0).unwrap();
        let half = fam.horizon() / 2.0;
        let inside = |x: &[f64]| x[0].abs() < 2.0;
        let traj = trajectory(grid(), 1.0, p, dt, fam.horizon(), |t, x| {
            if t <= half + 1e-9 && inside(x) {
                c
            } else {
                0.0
            }
        });
        let g = grid();
        let measure = g.points().filter(|x| inside(&x[..1])).count() as f64 * g.cell_volume();
        assert!((measure - 4.0).abs() < 2.0 * g.spacing());
        let want = c.powf(p) * measure * half;
        let got = compute_i(&traj, &fam).unwrap().i_r;
        // One trapezoid cell straddles the jump at R^σ̄/2.
        assert!((got - want).abs() <= c.powf(p) * measure * dt, "{got} vs {want}");
    }

    #[test]
    fn early_support_gives_no_j1() {
        let fam = TestFamily::new(1, 1.0, 1.5, 8.0, 1.0).unwrap();
        let half = fam.horizon() / 2.0;
        let traj = trajectory(grid(), 1.0, 1.5, 0.05, fam.horizon(), |t, x| {
            if t < half - 1e-9 {
                unit_bump(x[0] * x[0] / 4.0)
            } else {
                0.0
            }
        });
        let j = compute_j(&traj, &fam).unwrap();
        assert_eq!(j.j1, 0.0);
        assert!(j.j3 != 0.0);
    }

    #[test]
    fn j3_matches_rescaled_quadrature() {
        // v = 1 on |x| < 2 for t <= R^σ̄/2, with R = 4, K = 1, σ = 1.
        let (sigma, r, dt) = (1.0, 4.0, 0.01);
        let g = GridSpec::new(1, 1024.0, 1 << 16).unwrap();
        let fam = TestFamily::new(1, sigma, 1.5, r, 1.0).unwrap();
        let half = fam.horizon() / 2.0;
        let traj = trajectory(g, sigma, 1.5, dt, fam.horizon(), |t, x| {
            if t <= half + 1e-9 && x[0].abs() < 2.0 {
                1.0
            } else {
                0.0
            }
        });
        let j3 = compute_j(&traj, &fam).unwrap().j3;

        // μ · (time measure) · R^{-σ} ∫_{|x|<2} ((-Δ)^{σ/2} φ)(x/R) dx.
        let time_measure = half + dt / 2.0;
        let quad = FracQuadrature::new(1, sigma / 2.0, QuadratureSettings::smooth_decaying()).unwrap();
        let unit = fam.spatial.scaled(1.0);
        let (nodes, weights) = gauss_legendre(48);
        let space: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&z, &w)| 2.0 * w * quad.apply(&unit, &[2.0 * z / r]).unwrap().value)
            .sum();
        let want = time_measure * r.powf(-sigma) * space;
        assert!((j3 - want).abs() < 1e-2 * want.abs(), "{j3} vs {want}");
    }

    fn small_run(r_max: f64) -> (Trajectory, Field, Field) {
        let g = GridSpec::new(1, 128.0, 4096).unwrap();
        let mut cfg = SimConfig::new(g, 1.0, 1.0, 1.5, 0.02, r_max).unwrap();
        cfg.store_stride = 2;
        let u0 = Field::zeros(g);
        let u1 = Field::sample(g, |x| 0.1 * unit_bump(x[0] * x[0] / 4.0)).unwrap();
        (run(&cfg, u0.clone(), u1.clone()).unwrap(), u0, u1)
    }

    #[test]
    fn report_invariants_and_monotone_in_r() {
        let (traj, u0, u1) = small_run(8.0);
        let mut last = 0.0;
        for r in [1.0, 2.0, 4.0, 8.0] {
            let fam = TestFamily::new(1, 1.0, 1.5, r, 1.0).unwrap();
            let rep = certify(&traj, &fam, &u0, &u1).unwrap();
            assert!(rep.i_rt >= 0.0 && rep.i_rt <= rep.i_r);
            assert!(rep.i_rx >= 0.0 && rep.i_rx <= rep.i_r);
            assert!(rep.i_r >= last);
            last = rep.i_r;
        }
    }

    #[test]
    fn window_errors() {
        let (traj, u0, u1) = small_run(4.0);
        let fam = TestFamily::new(1, 1.0, 1.5, 8.0, 1.0).unwrap();
        assert!(matches!(certify(&traj, &fam, &u0, &u1), Err(Error::Window(_))));
        let mut blown = traj.clone();
        blown.verdict = Verdict::BlowUp { t_star: 3.0 };
        let fam = TestFamily::new(1, 1.0, 1.5, 4.0, 1.0).unwrap();
        assert!(matches!(compute_i(&blown, &fam), Err(Error::Window(_))));
        let mut bare = traj;
        bare.u.clear();
        bare.v.clear();
        assert!(matches!(compute_i(&bare, &fam), Err(Error::Window(_))));
    }

    #[test]
    fn tail_mass_shrinks_with_box() {
        let a = phi_tail_mass(1, 0.5, 8.0, 64.0);
        let b = phi_tail_mass(1, 0.5, 8.0, 512.0);
        assert!(b < a && b > 0.0);
        assert!(phi_tail_mass(1, 0.5, 8.0, 15.0).is_infinite());
    }
}
