//! The inequality chain: Hölder majorants of `J_1..J_3`, their `R`-power
//! forms, the Young absorption step, and the critical `K`-limit.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::functionals::{certify, check_window, CertReport, SnapshotSums, SpatialFactors, TimeFactors};
use crate::error::{Error, Result};
use crate::evolve::{run, SimConfig, Trajectory};
use crate::fit::fit_power_law;
use crate::grid::Field;
use crate::testfn::{conjugate_exponent, TestFamily};

/// `C(ε)` in `ab <= ε a^p + C(ε) b^{p'}`.
pub fn young_constant(eps: f64, p: f64) -> f64 {
    let pc = conjugate_exponent(p);
    (eps * p).powf(-pc / p) / pc
}

/// Largest `ab / (ε a^p + C(ε) b^{p'})` over the pairs; `<= 1` when the
/// inequality holds.
pub fn young_margin(eps: f64, p: f64, pairs: &[(f64, f64)]) -> f64 {
    let c = young_constant(eps, p);
    let pc = conjugate_exponent(p);
    pairs
        .iter()
        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
        .map(|&(a, b)| a * b / (eps * a.powf(p) + c * b.powf(pc)))
        .fold(0.0, f64::max)
}

/// `R`-exponents of the three power majorants and their `K`-exponents.
pub fn majorant_exponents(n: usize, sigma: f64, p: f64) -> [(f64, f64); 3] {
    let sb = sigma.min(1.0);
    let pc = conjugate_exponent(p);
    let nf = n as f64;
    let base = (nf + sb) / pc;
    [
        (-sb + base, nf / pc),
        (-2.0 + sb + base, -2.0 + nf / pc),
        (-sigma + base, -sigma + nf / pc),
    ]
}

/// `-σ̄p' + n + σ̄`.
pub fn predicted_exponent(n: usize, sigma: f64, p: f64) -> f64 {
    let sb = sigma.min(1.0);
    -sb * conjugate_exponent(p) + n as f64 + sb
}

#[derive(Debug, Clone, Serialize)]
pub struct MajorantRow {
    pub r: f64,
    pub j: [f64; 3],
    /// `I_part^{1/p} W_i^{1/p'}` with the Hölder weights measured on the
    /// same discrete measure as the functionals.
    pub holder: [f64; 3],
    /// `W_i^{1/p'}`.
    pub weight_roots: [f64; 3],
    /// `I_part^{1/p} R^{e_i} K^{k_i}`.
    pub power: [f64; 3],
    /// `2 C(1/2) (Σ_i W_i^{1/p'})^{p'}`, the measured right side of the
    /// `R`-rate bound.
    pub bound: f64,
    /// `R^{σ̄-2} ∫ |u_0| φ_R`.
    pub u0_majorant: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateChainReport {
    pub n: usize,
    pub sigma: f64,
    pub p: f64,
    pub k: f64,
    pub predicted_exponent: f64,
    pub reports: Vec<CertReport>,
    pub rows: Vec<MajorantRow>,
    /// `max |J_i| / holder_i`; discrete Hölder makes this `<= 1`.
    pub holder_ratio: f64,
    /// Single constant with `|J_i| <= C_0 · power_i` for every `i` and `R`.
    pub c0: f64,
    /// `C(1/2) (3 C_0)^{p'}`.
    pub c1: f64,
    pub bound_slope: f64,
    pub pairing_slope: f64,
    pub i_r_slope: f64,
    pub weight_slopes: [f64; 3],
    /// First `R` with `∫u_1φ_R > 2 R^{σ̄-2}∫|u_0|φ_R`.
    pub crossover_r: Option<f64>,
    pub young_margin: f64,
    /// `I_R <= bound` and `∫u_1φ_R <= bound` at every `R` past the crossover.
    pub bounds_hold: bool,
    pub majorants_hold: bool,
    pub slope_ok: bool,
}

fn weights(traj: &Trajectory, fam: &TestFamily, factors: &SpatialFactors, time: &TimeFactors) -> [f64; 3] {
    let grid = traj.grid();
    let h = grid.cell_volume();
    let p = fam.p;
    let pc = conjugate_exponent(p);
    let phi = factors.phi.values();
    let lap = factors.lap.values();
    let frac = factors.frac.values();
    let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
    for i in 0..grid.len() {
        s1 += phi[i];
        let damp = phi[i].powf(-pc / p);
        if factors.outer[i] {
            s2 += damp * lap[i].abs().powf(pc);
        }
        s3 += damp * frac[i].abs().powf(pc);
    }
    let profile = |f: &dyn Fn(f64, usize) -> f64| -> Vec<f64> {
        time.eta
            .iter()
            .enumerate()
            .map(|(i, &e)| if e > 0.0 { f(e, i) } else { 0.0 })
            .collect()
    };
    let t1 = profile(&|e, i| e.powf(-pc / p) * time.eta_prime[i].abs().powf(pc));
    let t2 = profile(&|e, i| e.powf(-pc / p) * time.psi[i].powf(pc));
    let ones = vec![1.0; time.eta.len()];
    let mu = traj.config.mu;
    [
        TimeFactors::integrate(&time.late, &t1, &ones) * h * s1,
        TimeFactors::integrate(&time.full, &t2, &ones) * h * s2,
        mu.powf(pc) * TimeFactors::integrate(&time.full, &time.eta, &ones) * h * s3,
    ]
}

/// The chain on an already computed trajectory.
pub fn rate_chain(
    traj: &Trajectory,
    fam: &TestFamily,
    r_list: &[f64],
    u0: &Field,
    u1: &Field,
) -> Result<RateChainReport> {
    if r_list.len() < 2 {
        return Err(Error::InvalidParameter("rate chain needs at least two R values".into()));
    }
    let p = fam.p;
    let pc = conjugate_exponent(p);
    let exps = majorant_exponents(fam.n, fam.sigma, p);
    let fams = r_list
        .iter()
        .map(|&r| fam.with_r(r))
        .collect::<Result<Vec<_>>>()?;
    for f in &fams {
        check_window(traj, f)?;
    }
    let per_r = fams
        .par_iter()
        .map(|f| -> Result<(CertReport, MajorantRow)> {
            let report = certify(traj, f, u0, u1)?;
            let factors = SpatialFactors::new(f, *traj.grid())?;
            let time = TimeFactors::new(&traj.times, f);
            let w = weights(traj, f, &factors, &time);
            let roots = w.map(|x| x.powf(1.0 / pc));
            let parts = [report.i_rt, report.i_rx, report.i_r].map(|x| x.max(0.0).powf(1.0 / p));
            let mut holder = [0.0; 3];
            let mut power = [0.0; 3];
            for i in 0..3 {
                holder[i] = parts[i] * roots[i];
                power[i] = parts[i] * f.r.powf(exps[i].0) * f.k.powf(exps[i].1);
            }
            let sum_roots: f64 = roots.iter().sum();
            let h = traj.grid().cell_volume();
            let u0_abs: f64 = u0
                .values()
                .iter()
                .zip(factors.phi.values())
                .map(|(a, b)| a.abs() * b)
                .sum::<f64>()
                * h;
            let row = MajorantRow {
                r: f.r,
                j: [report.j1, report.j2, report.j3],
                holder,
                weight_roots: roots,
                power,
                bound: 2.0 * young_constant(0.5, p) * sum_roots.powf(pc),
                u0_majorant: f.r.powf(f.sigma_bar - 2.0) * u0_abs,
            };
            Ok((report, row))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut reports, rows): (Vec<_>, Vec<_>) = per_r.into_iter().unzip();

    let mut holder_ratio = 0.0_f64;
    let mut c0 = 0.0_f64;
    for row in &rows {
        for i in 0..3 {
            if row.j[i] != 0.0 {
                holder_ratio = holder_ratio.max(row.j[i].abs() / row.holder[i]);
            }
            // The constant of the power form comes from the weights alone.
            let e = exps[i];
            c0 = c0.max(row.weight_roots[i] / (row.r.powf(e.0) * fam.k.powf(e.1)));
        }
    }
    let majorants_hold = holder_ratio <= 1.0 + 1e-9
        && rows
            .iter()
            .all(|row| (0..3).all(|i| row.j[i].abs() <= c0 * row.power[i] * (1.0 + 1e-9)));
    let c1 = young_constant(0.5, p) * (3.0 * c0).powf(pc);

    let rs: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let slope_of = |ys: Vec<f64>| -> f64 {
        fit_power_law(&rs, &ys).map(|f| f.slope).unwrap_or(f64::NAN)
    };
    let bound_slope = slope_of(rows.iter().map(|r| r.bound).collect());
    let pairing_slope = slope_of(reports.iter().map(|r| r.u1_pairing).collect());
    let i_r_slope = slope_of(reports.iter().map(|r| r.i_r).collect());
    let weight_slopes = [0, 1, 2].map(|i| slope_of(rows.iter().map(|r| r.weight_roots[i]).collect()));
    for (rep, ws) in reports.iter_mut().zip(std::iter::repeat(weight_slopes)) {
        let mut rates = BTreeMap::new();
        rates.insert("bound".to_string(), bound_slope);
        rates.insert("u1_pairing".to_string(), pairing_slope);
        rates.insert("I_R".to_string(), i_r_slope);
        for (i, w) in ws.iter().enumerate() {
            rates.insert(format!("W{}", i + 1), *w);
        }
        rep.fitted_rates = rates;
    }

    let crossover_r = reports
        .iter()
        .zip(&rows)
        .find(|(rep, row)| rep.u1_pairing > 2.0 * row.u0_majorant)
        .map(|(rep, _)| rep.r);
    let bounds_hold = reports.iter().zip(&rows).all(|(rep, row)| {
        crossover_r.is_some_and(|r0| rep.r < r0) || (rep.i_r <= row.bound && rep.u1_pairing <= row.bound)
    }) && crossover_r.is_some();
    let predicted = predicted_exponent(fam.n, fam.sigma, p);
    let pairs: Vec<(f64, f64)> = reports
        .iter()
        .zip(&rows)
        .map(|(rep, row)| (rep.i_r.powf(1.0 / p), row.weight_roots.iter().sum()))
        .collect();
    Ok(RateChainReport {
        n: fam.n,
        sigma: fam.sigma,
        p,
        k: fam.k,
        predicted_exponent: predicted,
        reports,
        rows,
        holder_ratio,
        c0,
        c1,
        bound_slope,
        pairing_slope,
        i_r_slope,
        weight_slopes,
        crossover_r,
        young_margin: young_margin(0.5, p, &pairs),
        bounds_hold,
        majorants_hold,
        slope_ok: bound_slope <= predicted + 0.1,
    })
}

/// Runs the solver once to the largest `R^{σ̄}` and evaluates the chain.
pub fn check_rate_r(
    cfg: &SimConfig,
    fam: &TestFamily,
    r_list: &[f64],
    u0: Field,
    u1: Field,
) -> Result<RateChainReport> {
    let top = r_list.iter().fold(0.0_f64, |m, &r| m.max(r.powf(fam.sigma_bar)));
    let mut cfg = cfg.clone();
    cfg.t_max = cfg.t_max.max(top);
    cfg.keep_snapshots = true;
    let traj = run(&cfg, u0.clone(), u1.clone())?;
    if let Some(t_star) = traj.verdict.t_star() {
        if t_star <= top {
            return Err(Error::Window(format!(
                "run blew up at t* = {t_star} before the largest R^σ̄ = {top}; shrink the R list"
            )));
        }
    }
    rate_chain(&traj, fam, r_list, &u0, &u1)
}

#[derive(Debug, Clone, Serialize)]
pub struct KRow {
    pub k: f64,
    pub i_r: f64,
    pub i_rt: f64,
    pub i_rx: f64,
    pub u1_pairing: f64,
    /// The three right-hand terms of the critical estimate.
    pub terms: [f64; 3],
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseTwoReport {
    pub r: f64,
    pub sigma: f64,
    pub p: f64,
    pub rows: Vec<KRow>,
    /// `-σ + n/p'` for `σ <= 1`, `1 - σ` for `σ > 1`.
    pub exponent: f64,
    pub branch: &'static str,
    /// `R^{1-σ}` in the `σ > 1` branch.
    pub r_factor: Option<f64>,
    pub decays: bool,
}

/// Critical-exponent bookkeeping for a list of `K` at fixed `R`.
pub fn check_case2_k(traj: &Trajectory, fam: &TestFamily, k_list: &[f64], r: f64) -> Result<CaseTwoReport> {
    let critical = 1.0 + fam.sigma_bar / fam.n as f64;
    if (fam.p - critical).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "critical-case check needs p = 1 + σ̄/n = {critical}, got {}",
            fam.p
        )));
    }
    if k_list.len() < 3 {
        return Err(Error::InvalidParameter("need at least three K values".into()));
    }
    let n = fam.n as f64;
    let p = fam.p;
    let pc = conjugate_exponent(p);
    let (sigma, sb) = (fam.sigma, fam.sigma_bar);
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let f = TestFamily::new(fam.n, sigma, p, r, k)?;
        check_window(traj, &f)?;
        let factors = SpatialFactors::new(&f, *traj.grid())?;
        let sums = SnapshotSums::new(traj, &factors, p);
        let time = TimeFactors::new(&traj.times, &f);
        let i_r = TimeFactors::integrate(&time.full, &time.eta, &sums.power);
        let i_rt = TimeFactors::integrate(&time.late, &time.eta, &sums.power);
        let i_rx = TimeFactors::integrate(&time.full, &time.eta, &sums.power_outer);
        let u1 = traj.v.first().expect("window check guarantees snapshots");
        let h = traj.grid().cell_volume();
        let u1_pairing = h * u1
            .values()
            .iter()
            .zip(factors.phi.values())
            .map(|(a, b)| a * b)
            .sum::<f64>();
        let terms = if sigma <= 1.0 {
            [
                i_rt.powf(1.0 / p) * k.powf(n / pc),
                i_rx.powf(1.0 / p) * r.powf(-2.0 + 2.0 * sb) * k.powf(-2.0 + n / pc),
                i_r.powf(1.0 / p) * r.powf(-sigma + sb) * k.powf(-sigma + n / pc),
            ]
        } else {
            [
                i_rt.powf(1.0 / p),
                i_rx.powf(1.0 / p),
                i_r.powf(1.0 / p) * r.powf(1.0 - sigma),
            ]
        };
        rows.push(KRow {
            k,
            i_r,
            i_rt,
            i_rx,
            u1_pairing,
            terms,
        });
    }
    let (exponent, branch, r_factor) = if sigma <= 1.0 {
        (-sigma + n / pc, "sigma<=1", None)
    } else {
        (1.0 - sigma, "sigma>1", Some(r.powf(1.0 - sigma)))
    };
    Ok(CaseTwoReport {
        r,
        sigma,
        p,
        rows,
        exponent,
        branch,
        r_factor,
        decays: exponent < 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::harness::unit_bump;

    #[test]
    fn young_constant_closed_form() {
        // p = 2: C(ε) = 1/(4ε).
        assert!((young_constant(0.5, 2.0) - 0.5).abs() < 1e-15);
        assert!((young_constant(0.25, 2.0) - 1.0).abs() < 1e-15);
        let pairs: Vec<(f64, f64)> = (1..50)
            .flat_map(|i| (1..50).map(move |j| (i as f64 * 0.1, j as f64 * 0.13)))
            .collect();
        for p in [1.2, 1.5, 2.0, 3.0] {
            let m = young_margin(0.5, p, &pairs);
            assert!(m <= 1.0 + 1e-12 && m > 0.5, "p = {p}: {m}");
        }
    }

    #[test]
    fn predicted_exponents() {
        assert!((predicted_exponent(1, 1.0, 1.5) + 1.0).abs() < 1e-12);
        assert!(predicted_exponent(1, 1.0, 2.0).abs() < 1e-12);
        assert!(predicted_exponent(1, 0.5, 1.5).abs() < 1e-12);
        let e = majorant_exponents(1, 1.0, 1.5);
        // p' = 3, (n + σ̄)/p' = 2/3.
        assert!((e[0].0 + 1.0 / 3.0).abs() < 1e-12 && (e[0].1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((e[1].0 + 1.0 / 3.0).abs() < 1e-12 && (e[1].1 + 5.0 / 3.0).abs() < 1e-12);
        assert!((e[2].0 + 1.0 / 3.0).abs() < 1e-12 && (e[2].1 + 2.0 / 3.0).abs() < 1e-12);
    }

    fn critical_run(sigma: f64) -> (Trajectory, TestFamily) {
        let g = GridSpec::new(1, 128.0, 4096).unwrap();
        let r = 4.0;
        let fam = TestFamily::new(1, sigma, 2.0, r, 1.0).unwrap();
        let mut cfg = SimConfig::new(g, 1.0, sigma, 2.0, 0.02, fam.horizon()).unwrap();
        cfg.store_stride = 2;
        let u1 = Field::sample(g, |x| 0.05 * unit_bump(x[0] * x[0] / 4.0)).unwrap();
        (run(&cfg, Field::zeros(g), u1).unwrap(), fam)
    }

    #[test]
    fn case_two_sigma_one() {
        let (traj, fam) = critical_run(1.0);
        let rep = check_case2_k(&traj, &fam, &[1.0, 2.0, 4.0], 4.0).unwrap();
        assert!((rep.exponent + 0.5).abs() < 1e-12);
        assert!(rep.decays && rep.r_factor.is_none());
        // K = 1 reproduces the plain report.
        let plain = certify(&traj, &fam, &traj.u[0], &traj.v[0]).unwrap();
        assert_eq!(rep.rows[0].i_r, plain.i_r);
        assert_eq!(rep.rows[0].i_rt, plain.i_rt);
        assert_eq!(rep.rows[0].i_rx, plain.i_rx);
        assert_eq!(rep.rows[0].u1_pairing, plain.u1_pairing);
        for w in rep.rows.windows(2) {
            assert!(w[1].i_r >= w[0].i_r);
        }
    }

    #[test]
    fn case_two_sigma_two() {
        let (traj, fam) = critical_run(2.0);
        let rep = check_case2_k(&traj, &fam, &[1.0, 2.0, 4.0], 4.0).unwrap();
        assert_eq!(rep.exponent, -1.0);
        assert!((rep.r_factor.unwrap() - 0.25).abs() < 1e-15);
        assert!(rep.decays);
    }

    #[test]
    fn case_two_rejects_bad_input() {
        let (traj, fam) = critical_run(1.0);
        let off = TestFamily::new(1, 1.0, 1.5, 4.0, 1.0).unwrap();
        assert!(check_case2_k(&traj, &off, &[1.0, 2.0, 4.0], 4.0).is_err());
        assert!(check_case2_k(&traj, &fam, &[1.0, 2.0], 4.0).is_err());
    }
}
