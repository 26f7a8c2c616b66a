use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::spectral::SpectralPlan;

/// `(-Δ)^{σ/2}` on the periodic box as the discrete multiplier `|ξ_k|^σ`.
#[derive(Debug, Clone)]
pub struct FracSpectral {
    plan: SpectralPlan,
    sigma: f64,
    multipliers: Vec<f64>,
}

impl FracSpectral {
    pub fn new(spec: GridSpec, sigma: f64) -> Result<Self> {
        Self::with_plan(SpectralPlan::new(spec), sigma)
    }

    pub fn with_plan(plan: SpectralPlan, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must lie in (0, 2], got {sigma}"
            )));
        }
        let moduli = plan.squared_moduli();
        let multipliers = if sigma == 2.0 {
            moduli
        } else {
            moduli.iter().map(|&k2| k2.powf(0.5 * sigma)).collect()
        };
        Ok(Self {
            plan,
            sigma,
            multipliers,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        let (out, residue) = self.plan.apply_multiplier(f, &self.multipliers);
        let threshold = 1e-10 * f.sup();
        if residue > threshold && residue > f64::MIN_POSITIVE {
            return Err(Error::ImaginaryResidue { residue, threshold });
        }
        Ok(out)
    }

    /// Trigonometric-interpolant values of `(-Δ)^{σ/2} f` at arbitrary points.
    pub fn evaluate_at(&self, f: &Field, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut coeffs = self.plan.forward(f);
        for (z, &m) in coeffs.iter_mut().zip(&self.multipliers) {
            *z *= m;
        }
        Ok(probes
            .iter()
            .map(|x| self.plan.evaluate_series(&coeffs, x))
            .collect())
    }
}

pub fn spectral_apply(f: &Field, sigma: f64) -> Result<Field> {
    FracSpectral::new(*f.spec(), sigma)?.apply(f)
}

/// Classical `-Δ` through the symbol `ξ_1^2 + ... + ξ_n^2`.
pub fn spectral_laplacian(f: &Field) -> Field {
    let plan = SpectralPlan::new(*f.spec());
    let spec = f.spec();
    let n = spec.points_per_axis();
    let k = plan.wavenumbers();
    let symbol: Vec<f64> = match spec.dim() {
        1 => k.iter().map(|x| x * x).collect(),
        _ => (0..n * n).map(|i| k[i / n] * k[i / n] + k[i % n] * k[i % n]).collect(),
    };
    plan.apply_multiplier(f, &symbol).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: &Field, b: &Field, tol: f64) -> bool {
        a.values().iter().zip(b.values()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn multiplier_invariants() {
        let g = GridSpec::new(2, 3.0, 16).unwrap();
        let op = FracSpectral::new(g, 0.7).unwrap();
        let m = op.multipliers();
        assert_eq!(m[0], 0.0);
        assert!(m.iter().all(|&v| v >= 0.0));
        let n = 16;
        for r in 1..n {
            for c in 1..n {
                assert_eq!(m[r * n + c], m[(n - r) * n + (n - c)]);
            }
        }
        assert!(FracSpectral::new(g, 0.0).is_err());
        assert!(FracSpectral::new(g, 2.5).is_err());
    }

    #[test]
    fn constant_maps_to_zero() {
        let g = GridSpec::new(1, 5.0, 64).unwrap();
        let c = Field::sample(g, |_| 3.0).unwrap();
        let out = spectral_apply(&c, 1.3).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn sine_is_an_eigenfunction() {
        let g = GridSpec::new(1, PI, 64).unwrap();
        let f = Field::sample(g, |x| (3.0 * x[0]).sin()).unwrap();
        let out = spectral_apply(&f, 1.0).unwrap();
        assert!(close(&out, &f.map(|v| 3.0 * v), 1e-10));
        let out2 = spectral_apply(&f, 2.0).unwrap();
        assert!(close(&out2, &f.map(|v| 9.0 * v), 1e-10));
        assert_eq!(out2, spectral_laplacian(&f));
    }

    #[test]
    fn sigma_two_matches_classical_laplacian_in_2d() {
        let g = GridSpec::new(2, 4.0, 32).unwrap();
        let f = Field::sample(g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()).unwrap();
        assert_eq!(spectral_apply(&f, 2.0).unwrap(), spectral_laplacian(&f));
    }

    #[test]
    fn lattice_modes_scale_by_symbol() {
        let g = GridSpec::new(1, 2.0, 32).unwrap();
        for k in [1i32, 5, 11] {
            let xi = PI * k as f64 / 2.0;
            let f = Field::sample(g, |x| (xi * x[0]).cos()).unwrap();
            let out = spectral_apply(&f, 0.6).unwrap();
            let scale = xi.powf(0.6);
            assert!(close(&out, &f.map(|v| scale * v), 1e-12 * scale));
        }
    }

    #[test]
    fn probe_evaluation_matches_grid_output() {
        let g = GridSpec::new(1, 8.0, 256).unwrap();
        let f = Field::sample(g, |x| (-x[0] * x[0]).exp()).unwrap();
        let op = FracSpectral::new(g, 1.2).unwrap();
        let grid_out = op.apply(&f).unwrap();
        let idx = 128 + 16;
        let p = g.point(idx);
        let at = op.evaluate_at(&f, &[vec![p[0]]]).unwrap();
        assert!((at[0] - grid_out.values()[idx]).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn linear_and_translation_invariant(vals in prop::collection::vec(-1.0f64..1.0, 64),
                                            other in prop::collection::vec(-1.0f64..1.0, 64),
                                            shift in 1usize..63, a in -2.0f64..2.0) {
            let g = GridSpec::new(1, 3.0, 64).unwrap();
            let f = Field::from_values(g, vals.clone()).unwrap();
            let h = Field::from_values(g, other).unwrap();
            let op = FracSpectral::new(g, 0.8).unwrap();
            let lhs = op.apply(&f.zip_with(&h, |x, y| a * x + y)).unwrap();
            let rhs = op.apply(&f).unwrap().zip_with(&op.apply(&h).unwrap(), |x, y| a * x + y);
            prop_assert!(close(&lhs, &rhs, 1e-11));

            let rotated: Vec<f64> = (0..64).map(|i| vals[(i + shift) % 64]).collect();
            let fr = Field::from_values(g, rotated).unwrap();
            let out = op.apply(&f).unwrap();
            let out_r = op.apply(&fr).unwrap();
            for i in 0..64 {
                prop_assert!((out_r.values()[i] - out.values()[(i + shift) % 64]).abs() < 1e-11);
            }
        }

        #[test]
        fn symbols_compose(vals in prop::collection::vec(-1.0f64..1.0, 64), s1 in 0.05f64..1.0, s2 in 0.05f64..1.0) {
            let g = GridSpec::new(1, 3.0, 64).unwrap();
            let f = Field::from_values(g, vals).unwrap();
            let twice = spectral_apply(&spectral_apply(&f, s1).unwrap(), s2).unwrap();
            let once = spectral_apply(&f, s1 + s2).unwrap();
            let scale = once.sup().max(1e-300);
            for (a, b) in twice.values().iter().zip(once.values()) {
                prop_assert!((a - b).abs() <= 1e-10 * scale);
            }
        }

        #[test]
        fn quadratic_form_is_nonnegative(vals in prop::collection::vec(-1.0f64..1.0, 64), sigma in 0.01f64..2.0) {
            let g = GridSpec::new(1, 3.0, 64).unwrap();
            let f = Field::from_values(g, vals).unwrap();
            let lf = spectral_apply(&f, sigma).unwrap();
            prop_assert!(f.zip_with(&lf, |a, b| a * b).integrate() >= -1e-12);
        }
    }
}
