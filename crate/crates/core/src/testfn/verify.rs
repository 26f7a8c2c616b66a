//! Numerical checks of the cutoff estimates: pointwise domination of
//! `(-Δ)^s φ` by `φ`, exact scaling under dilation, the `R`-rate of the
//! weighted integral, and the boundedness of `η^{-1/p} |η'|`.

use rayon::prelude::*;
use serde::Serialize;

use super::cutoff::{conjugate_exponent, SpatialCutoff, TemporalCutoff, TestFamily};
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerFit};
use crate::fracop::{spectral_apply, FracQuadrature, FracSpectral, QuadratureSettings};
use crate::grid::{Field, GridSpec};

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub n: usize,
    pub s: f64,
    pub grid_points: usize,
    pub half_width: f64,
    /// `max |(-Δ)^s φ| / φ` over lattice points with `|x| <= L/2`.
    pub c_est: f64,
    pub argmax_radius: f64,
    /// Largest relative gap between spectral and quadrature values at the
    /// spot-check probes (absent for `s = 1`).
    pub spot_check: Option<f64>,
}

pub fn verify_lemma_domination(n: usize, s: f64, grid: GridSpec) -> Result<DominationReport> {
    if grid.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "grid dimension {} does not match n = {n}",
            grid.dim()
        )));
    }
    let cutoff = SpatialCutoff::new(n, s)?;
    let phi = Field::sample(grid, |x| cutoff.phi(x))?;
    let op = FracSpectral::new(grid, 2.0 * s)?;
    let frac = op.apply(&phi)?;
    let interior = grid.half_width() / 2.0;
    let mut c_est = 0.0_f64;
    let mut argmax_radius = 0.0;
    for i in 0..grid.len() {
        let r = grid.radius(i);
        if r > interior {
            continue;
        }
        let ratio = frac.values()[i].abs() / phi.values()[i];
        if !ratio.is_finite() {
            return Err(Error::NonFinite {
                context: format!("domination ratio at |x| = {r}"),
            });
        }
        if ratio > c_est {
            c_est = ratio;
            argmax_radius = r;
        }
    }
    let spot_check = if s < 1.0 {
        let quad = FracQuadrature::new(n, s, QuadratureSettings::smooth_decaying())?;
        let scaled = cutoff.scaled(1.0);
        let probes: Vec<Vec<f64>> = [0.0, 0.5, 1.5, 3.0, interior / 2.0]
            .iter()
            .map(|&r| {
                let mut p = vec![0.0; n];
                p[0] = r;
                p
            })
            .collect();
        let spectral = op.evaluate_at(&phi, &probes)?;
        let mut worst = 0.0_f64;
        for (x, a) in probes.iter().zip(&spectral) {
            let b = quad.apply(&scaled, x)?.value;
            worst = worst.max((a - b).abs() / b.abs().max(1e-300));
        }
        Some(worst)
    } else {
        None
    };
    Ok(DominationReport {
        n,
        s,
        grid_points: grid.points_per_axis(),
        half_width: grid.half_width(),
        c_est,
        argmax_radius,
        spot_check,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub s: f64,
    pub r: f64,
    pub probes: Vec<Vec<f64>>,
    /// `(-Δ)^s(φ_R)(x)`.
    pub dilated: Vec<f64>,
    /// `R^{-2s} ((-Δ)^s φ)(x/R)`.
    pub rescaled: Vec<f64>,
    pub max_deviation: f64,
}

/// Both sides of the dilation identity by quadrature.
pub fn verify_lemma_scaling(s: f64, r: f64, probes: &[Vec<f64>]) -> Result<ScalingReport> {
    if !(s > 0.0 && s < 1.0) || r < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "scaling check needs s in (0, 1) and R >= 1, got s = {s}, R = {r}"
        )));
    }
    let n = probes.first().map_or(1, Vec::len);
    let cutoff = SpatialCutoff::new(n, s)?;
    let quad = FracQuadrature::new(n, s, QuadratureSettings::smooth_decaying())?;
    let (dilated_fn, unit_fn) = (cutoff.scaled(r), cutoff.scaled(1.0));
    let mut dilated = Vec::with_capacity(probes.len());
    let mut rescaled = Vec::with_capacity(probes.len());
    let mut max_deviation = 0.0_f64;
    for x in probes {
        let lhs = quad.apply(&dilated_fn, x)?.value;
        let y: Vec<f64> = x.iter().map(|c| c / r).collect();
        let rhs = r.powf(-2.0 * s) * quad.apply(&unit_fn, &y)?.value;
        max_deviation = max_deviation.max((lhs - rhs).abs() / rhs.abs().max(1e-300));
        dilated.push(lhs);
        rescaled.push(rhs);
    }
    Ok(ScalingReport {
        s,
        r,
        probes: probes.to_vec(),
        dilated,
        rescaled,
        max_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub n: usize,
    pub s: f64,
    pub p: f64,
    pub r_list: Vec<f64>,
    pub integrals: Vec<f64>,
    pub expected_slope: f64,
    pub fit: PowerFit,
}

/// `∫ φ_R^{-1/(p-1)} |(-Δ)^s φ_R|^{p/(p-1)}` for one `R` on the box
/// `[-R L_0, R L_0)^n`. In one dimension the lattice keeps the spacing of
/// the base grid `(N, L_0)` (points rounded up to a power of two), so the
/// fitted rate is not an artefact of a co-dilated lattice; in two dimensions
/// the `N` points per axis are dilated with the box.
pub fn weighted_rate_integral(n: usize, s: f64, p: f64, r: f64, base: (usize, f64)) -> Result<f64> {
    let (points, l0) = base;
    let points = match n {
        1 => (points as f64 * r).ceil() as usize,
        _ => points,
    };
    let grid = GridSpec::new(n, r * l0, points.next_power_of_two())?;
    let cutoff = SpatialCutoff::new(n, s)?;
    let phi = Field::sample(grid, |x| {
        let y: Vec<f64> = x.iter().map(|c| c / r).collect();
        cutoff.phi(&y)
    })?;
    let frac = spectral_apply(&phi, 2.0 * s)?;
    let q = 1.0 / (p - 1.0);
    let weighted = phi.zip_with(&frac, |ph, lf| ph.powf(-q) * lf.abs().powf(p * q));
    let value = weighted.integrate();
    if !value.is_finite() {
        return Err(Error::NonFinite {
            context: format!("rate integral at R = {r}"),
        });
    }
    Ok(value)
}

pub fn verify_lemma_rate(
    n: usize,
    s: f64,
    p: f64,
    r_list: &[f64],
    base: (usize, f64),
) -> Result<RateReport> {
    if !(p > 1.0) {
        return Err(Error::InvalidParameter(format!("need p > 1, got {p}")));
    }
    let integrals = r_list
        .par_iter()
        .map(|&r| weighted_rate_integral(n, s, p, r, base))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(r_list, &integrals)?;
    Ok(RateReport {
        n,
        s,
        p,
        r_list: r_list.to_vec(),
        integrals,
        expected_slope: -2.0 * s * p / (p - 1.0) + n as f64,
        fit,
    })
}

/// Dense-sample maximum of `η^{-1/p} |η'|` over `[1/2, 1)` where `η > 0`.
pub fn eta_condition_constant(p: f64, samples: usize) -> Result<f64> {
    let eta = TemporalCutoff::new(p)?;
    let mut worst = 0.0_f64;
    for i in 0..samples {
        let t = 0.5 + 0.5 * i as f64 / samples as f64;
        let e = eta.eta(t);
        if e > 0.0 {
            let v = e.powf(-1.0 / p) * eta.eta_prime(t).abs();
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("η^(-1/p)|η'| at t = {t}"),
                });
            }
            worst = worst.max(v);
        }
    }
    Ok(worst)
}

/// Largest value of `η_R^{-p'/p} Ψ_R^{p'} / R^{σ̄ p'}` on a uniform sample of
/// `[0, R^{σ̄})` restricted to `η_R > 0`; the proof needs it to be `<= 1`.
pub fn psi_pointwise_ratio(fam: &TestFamily, samples: usize) -> f64 {
    let pc = conjugate_exponent(fam.p);
    let top = fam.horizon();
    let bound = top.powf(pc);
    (0..samples)
        .map(|i| top * i as f64 / samples as f64)
        .filter_map(|t| {
            let e = fam.eta_r(t);
            (e > 0.0).then(|| e.powf(-pc / fam.p) * fam.psi_r(t).powf(pc) / bound)
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domination_is_finite_and_positive() {
        let grid = GridSpec::new(1, 16.0, 2048).unwrap();
        let rep = verify_lemma_domination(1, 0.5, grid).unwrap();
        assert!(rep.c_est.is_finite() && rep.c_est > 0.0);
        assert!(rep.spot_check.unwrap() < 5e-2, "{:?}", rep.spot_check);
    }

    #[test]
    fn domination_s1_matches_closed_form() {
        let grid = GridSpec::new(1, 16.0, 2048).unwrap();
        let rep = verify_lemma_domination(1, 1.0, grid).unwrap();
        let c = SpatialCutoff::new(1, 1.0).unwrap();
        let oracle = (0..grid.len())
            .filter(|&i| grid.radius(i) <= 8.0)
            .map(|i| {
                let x = [grid.point(i)[0]];
                c.laplacian(&x).abs() / c.phi(&x)
            })
            .fold(0.0, f64::max);
        assert!((rep.c_est - oracle).abs() < 1e-3 * oracle, "{} vs {oracle}", rep.c_est);
        assert!(rep.spot_check.is_none());
    }

    #[test]
    fn scaling_at_r_one_is_exact() {
        let rep = verify_lemma_scaling(0.5, 1.0, &[vec![0.0], vec![1.5]]).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
    }

    #[test]
    fn scaling_identity_holds() {
        let probes = vec![vec![0.0], vec![1.0], vec![2.0]];
        let rep = verify_lemma_scaling(0.5, 4.0, &probes).unwrap();
        assert!(rep.max_deviation < 1e-6, "{}", rep.max_deviation);
    }

    #[test]
    fn rate_slope_half_order() {
        let rep = verify_lemma_rate(1, 0.5, 2.0, &[4.0, 8.0, 16.0, 32.0], (2048, 16.0)).unwrap();
        assert!((rep.fit.slope - rep.expected_slope).abs() < 0.05, "{:?}", rep.fit);
        assert_eq!(rep.expected_slope, -1.0);
    }

    #[test]
    fn doubling_r_rescales_by_power_of_slope() {
        let base = (2048, 32.0);
        let a = weighted_rate_integral(1, 1.0, 2.0, 4.0, base).unwrap();
        let b = weighted_rate_integral(1, 1.0, 2.0, 8.0, base).unwrap();
        assert!((b / a - 2f64.powf(-3.0)).abs() < 1e-3 * 2f64.powf(-3.0));
    }

    #[test]
    fn eta_condition_is_finite_for_p2() {
        let c = eta_condition_constant(2.0, 100_000).unwrap();
        assert!(c.is_finite() && c > 0.0);
        // Refinement does not change the maximum appreciably.
        let c2 = eta_condition_constant(2.0, 200_000).unwrap();
        assert!((c - c2).abs() < 1e-3 * c);
    }

    #[test]
    fn psi_ratio_below_one() {
        for r in [4.0, 16.0] {
            let fam = TestFamily::new(1, 1.0, 1.5, r, 1.0).unwrap();
            assert!(psi_pointwise_ratio(&fam, 10_000) <= 1.0);
        }
    }
}
