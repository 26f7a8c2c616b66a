use serde::Serialize;

use super::bernstein::Bernstein;
use crate::error::{Error, Result};
use crate::fracop::{FracSpectral, PointFunction};
use crate::grid::{Field, GridSpec};

/// `⟨x⟩ = (1 + (|x| - 1)^4)^{1/4}`, defined for every `x`.
pub fn bracket(r: f64) -> f64 {
    let w = r - 1.0;
    (1.0 + w * w * w * w).powf(0.25)
}

pub fn sigma_bar(sigma: f64) -> f64 {
    sigma.min(1.0)
}

pub fn conjugate_exponent(p: f64) -> f64 {
    p / (p - 1.0)
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// `φ = 1` on the unit ball and `⟨x⟩^{-n-2s}` outside it; C² across the
/// unit sphere (its first three radial derivatives vanish there).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialCutoff {
    n: usize,
    s: f64,
}

impl SpatialCutoff {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cutoff order s must lie in (0, 1], got {s}"
            )));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        Ok(Self { n, s })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> f64 {
        self.s
    }

    fn decay(&self) -> f64 {
        self.n as f64 + 2.0 * self.s
    }

    pub fn radial(&self, r: f64) -> f64 {
        if r <= 1.0 {
            1.0
        } else {
            bracket(r).powf(-self.decay())
        }
    }

    /// Radial derivatives `(φ', φ'')` at `r`.
    pub fn radial_derivatives(&self, r: f64) -> (f64, f64) {
        if r <= 1.0 {
            return (0.0, 0.0);
        }
        let a = self.decay();
        let w = r - 1.0;
        let b = 1.0 + w.powi(4);
        let d1 = -a * w.powi(3) * b.powf(-a / 4.0 - 1.0);
        let d2 = -a
            * (3.0 * w * w * b.powf(-a / 4.0 - 1.0)
                - (a + 4.0) * w.powi(6) * b.powf(-a / 4.0 - 2.0));
        (d1, d2)
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        self.radial(radius(x))
    }

    /// `Δφ = φ'' + (n-1) φ'/r`.
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let r = radius(x);
        if r <= 1.0 {
            return 0.0;
        }
        let (d1, d2) = self.radial_derivatives(r);
        d2 + (self.n as f64 - 1.0) * d1 / r
    }

    pub fn scaled(&self, scale: f64) -> ScaledCutoff {
        ScaledCutoff { cutoff: *self, scale }
    }
}

/// `x ↦ φ(x / scale)`.
#[derive(Debug, Clone, Copy)]
pub struct ScaledCutoff {
    pub cutoff: SpatialCutoff,
    pub scale: f64,
}

impl PointFunction for ScaledCutoff {
    fn eval(&self, x: &[f64]) -> f64 {
        self.cutoff.radial(radius(x) / self.scale)
    }

    fn sup_abs(&self) -> f64 {
        1.0
    }

    fn radial_breaks(&self) -> Vec<f64> {
        vec![self.scale]
    }
}

/// Smoothstep `S(u) = 6u^5 - 15u^4 + 10u^3`.
fn smoothstep(u: f64) -> f64 {
    u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)
}

fn smoothstep_prime(u: f64) -> f64 {
    30.0 * u * u * (1.0 - u) * (1.0 - u)
}

/// `η = ζ^m` where `ζ = 1` on `[0, 1/2]`, falls as a quintic smoothstep on
/// `[1/2, 1]` and vanishes afterwards. With `m = ceil(p') + 1` the quantity
/// `η^{-1/p} |η'| = m ζ^{m-1-m/p} |ζ'|` stays bounded.
#[derive(Debug, Clone)]
pub struct TemporalCutoff {
    p: f64,
    m: u32,
    /// `u ↦ ∫_0^u S^m` with `u = 2 - 2t` on the falling part.
    falling_integral: Bernstein,
}

impl TemporalCutoff {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::InvalidParameter(format!("need p > 1, got {p}")));
        }
        let m = conjugate_exponent(p).ceil() as u32 + 1;
        let s = Bernstein::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        Ok(Self {
            p,
            m,
            falling_integral: s.powi(m).antiderivative(),
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn exponent(&self) -> u32 {
        self.m
    }

    pub fn eta(&self, t: f64) -> f64 {
        if t <= 0.5 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            smoothstep(2.0 - 2.0 * t).powi(self.m as i32)
        }
    }

    pub fn eta_prime(&self, t: f64) -> f64 {
        if t <= 0.5 || t >= 1.0 {
            0.0
        } else {
            let u = 2.0 - 2.0 * t;
            -2.0 * self.m as f64 * smoothstep(u).powi(self.m as i32 - 1) * smoothstep_prime(u)
        }
    }

    /// `∫_t^∞ η`, exact.
    pub fn tail_integral(&self, t: f64) -> f64 {
        if t >= 1.0 {
            0.0
        } else if t >= 0.5 {
            0.5 * self.falling_integral.eval(2.0 - 2.0 * t)
        } else {
            (0.5 - t) + 0.5 * self.falling_integral.eval(1.0)
        }
    }
}

/// The scaled family `φ_R(x) = φ(x/(RK))`, `η_R(t) = η(R^{-σ̄} t)`,
/// `Ψ_R(t) = ∫_t^∞ η_R`.
#[derive(Debug, Clone)]
pub struct TestFamily {
    pub n: usize,
    pub sigma: f64,
    pub sigma_bar: f64,
    pub p: f64,
    pub r: f64,
    pub k: f64,
    pub spatial: SpatialCutoff,
    pub temporal: TemporalCutoff,
}

impl TestFamily {
    pub fn new(n: usize, sigma: f64, p: f64, r: f64, k: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must lie in (0, 2], got {sigma}"
            )));
        }
        if !(r >= 1.0 && k >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need R >= 1 and K >= 1, got R = {r}, K = {k}"
            )));
        }
        Ok(Self {
            n,
            sigma,
            sigma_bar: sigma_bar(sigma),
            p,
            r,
            k,
            spatial: SpatialCutoff::new(n, sigma / 2.0)?,
            temporal: TemporalCutoff::new(p)?,
        })
    }

    pub fn with_r(&self, r: f64) -> Result<Self> {
        Self::new(self.n, self.sigma, self.p, r, self.k)
    }

    pub fn with_k(&self, k: f64) -> Result<Self> {
        Self::new(self.n, self.sigma, self.p, self.r, k)
    }

    /// `R^{σ̄}`, the end of the temporal support.
    pub fn horizon(&self) -> f64 {
        self.r.powf(self.sigma_bar)
    }

    /// `RK`, the radius of the plateau of `φ_R`.
    pub fn spatial_scale(&self) -> f64 {
        self.r * self.k
    }

    pub fn phi_r(&self, x: &[f64]) -> f64 {
        self.spatial.radial(radius(x) / self.spatial_scale())
    }

    pub fn laplacian_phi_r(&self, x: &[f64]) -> f64 {
        let scale = self.spatial_scale();
        let y: Vec<f64> = x.iter().map(|c| c / scale).collect();
        self.spatial.laplacian(&y) / (scale * scale)
    }

    pub fn eta_r(&self, t: f64) -> f64 {
        self.temporal.eta(t / self.horizon())
    }

    pub fn eta_r_prime(&self, t: f64) -> f64 {
        self.temporal.eta_prime(t / self.horizon()) / self.horizon()
    }

    pub fn psi_r(&self, t: f64) -> f64 {
        self.horizon() * self.temporal.tail_integral(t / self.horizon())
    }

    pub fn phi_r_field(&self, spec: GridSpec) -> Result<Field> {
        Field::sample(spec, |x| self.phi_r(x))
    }

    pub fn laplacian_phi_r_field(&self, spec: GridSpec) -> Result<Field> {
        Field::sample(spec, |x| self.laplacian_phi_r(x))
    }

    /// `(-Δ)^{σ/2} φ_R` on the periodic grid.
    pub fn frac_phi_r_field(&self, spec: GridSpec) -> Result<Field> {
        FracSpectral::new(spec, self.sigma)?.apply(&self.phi_r_field(spec)?)
    }

    pub fn scaled_cutoff(&self) -> ScaledCutoff {
        self.spatial.scaled(self.spatial_scale())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bracket_examples() {
        assert_eq!(bracket(1.0), 1.0);
        assert!((bracket(0.0) - 2f64.powf(0.25)).abs() < 1e-15);
        assert!((bracket(3.0) - 17f64.powf(0.25)).abs() < 1e-15);
        assert!((bracket(0.0) - 1.189207).abs() < 1e-6);
        assert!((bracket(3.0) - 2.030543).abs() < 1e-6);
    }

    #[test]
    fn phi_examples() {
        let c = SpatialCutoff::new(1, 0.5).unwrap();
        assert_eq!(c.phi(&[0.5]), 1.0);
        assert!((c.phi(&[3.0]) - 17f64.powf(-0.5)).abs() < 1e-15);
        assert!((c.phi(&[-3.0]) - 0.24254).abs() < 1e-5);
        assert_eq!(c.phi(&[1.0]), 1.0);
        assert_eq!(c.radial(1.0 + 1e-12), bracket(1.0 + 1e-12).powf(-2.0));
        assert!(SpatialCutoff::new(1, 0.0).is_err());
        assert!(SpatialCutoff::new(1, 1.5).is_err());
    }

    #[test]
    fn laplacian_examples() {
        let c = SpatialCutoff::new(1, 0.5).unwrap();
        assert_eq!(c.laplacian(&[0.5]), 0.0);
        assert_eq!(c.laplacian(&[1.0]), 0.0);
        let h = 1e-4;
        let fd = (c.phi(&[2.0 + h]) - 2.0 * c.phi(&[2.0]) + c.phi(&[2.0 - h])) / (h * h);
        assert!((c.laplacian(&[2.0]) - fd).abs() < 1e-6);
    }

    #[test]
    fn laplacian_2d_matches_finite_differences() {
        let c = SpatialCutoff::new(2, 0.3).unwrap();
        let h = 1e-4;
        for p in [[1.3, 0.4], [-0.2, 2.1], [3.0, -3.0]] {
            let f = |dx: f64, dy: f64| c.phi(&[p[0] + dx, p[1] + dy]);
            let fd = (f(h, 0.0) + f(-h, 0.0) + f(0.0, h) + f(0.0, -h) - 4.0 * f(0.0, 0.0)) / (h * h);
            assert!((c.laplacian(&p) - fd).abs() < 2e-6, "{p:?}");
        }
    }

    #[test]
    fn phi_seam_is_c2() {
        for s in [0.25, 0.5, 1.0] {
            let c = SpatialCutoff::new(1, s).unwrap();
            let h = 1e-3;
            let second = |x: f64| (c.radial(x + h) - 2.0 * c.radial(x) + c.radial(x - h)) / (h * h);
            // One-sided second differences just inside and outside r = 1.
            let inside = second(1.0 - h);
            let outside = second(1.0 + h);
            assert_eq!(inside, 0.0);
            // Quartic contact: the difference is about (1 + 2s) (14/4) h^2.
            assert!(outside.abs() < 4.0 * (1.0 + 2.0 * s) * h * h, "s = {s}: {outside}");
            let (d1, d2) = c.radial_derivatives(1.0 + 1e-6);
            assert!(d1.abs() < 1e-16 && d2.abs() < 1e-10);
        }
    }

    #[test]
    fn sigma_bar_cases() {
        assert_eq!(sigma_bar(0.5), 0.5);
        assert_eq!(sigma_bar(1.0), 1.0);
        assert_eq!(sigma_bar(2.0), 1.0);
    }

    #[test]
    fn eta_examples() {
        let eta = TemporalCutoff::new(2.0).unwrap();
        assert_eq!(eta.exponent(), 3);
        assert_eq!(eta.eta(0.25), 1.0);
        assert_eq!(eta.eta_prime(0.25), 0.0);
        assert_eq!(eta.eta(1.5), 0.0);
        assert_eq!(eta.eta_prime(1.5), 0.0);
        assert!(TemporalCutoff::new(1.0).is_err());
        assert!(TemporalCutoff::new(0.5).is_err());
    }

    #[test]
    fn eta_prime_matches_finite_difference() {
        let eta = TemporalCutoff::new(1.5).unwrap();
        let h = 1e-6;
        for i in 1..50 {
            let t = 0.5 + i as f64 / 100.0;
            let fd = (eta.eta(t + h) - eta.eta(t - h)) / (2.0 * h);
            assert!((eta.eta_prime(t) - fd).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn eta_seams_are_c2() {
        // η'' is identically zero on the flat sides, so C² means η''(seam ± δ)
        // vanishes with δ on the falling side.
        let eta = TemporalCutoff::new(2.0).unwrap();
        let d2 = |t: f64, h: f64| (eta.eta_prime(t + h) - eta.eta_prime(t - h)) / (2.0 * h);
        for delta in [1e-3, 1e-4, 1e-5] {
            let h = delta / 10.0;
            assert!(d2(0.5 + delta, h).abs() <= 2000.0 * delta);
            assert!(d2(1.0 - delta, h).abs() <= 2000.0 * delta);
            assert_eq!(d2(0.5 - delta, h), 0.0);
            assert_eq!(d2(1.0 + delta, h), 0.0);
        }
    }

    #[test]
    fn psi_examples() {
        let fam = TestFamily::new(1, 1.0, 2.0, 4.0, 1.0).unwrap();
        let top = fam.horizon();
        assert_eq!(top, 4.0);
        assert_eq!(fam.psi_r(top), 0.0);
        assert_eq!(fam.psi_r(top + 3.0), 0.0);
        let p0 = fam.psi_r(0.0);
        assert!(p0 <= top && p0 >= top / 2.0);
        let eps = 1e-4;
        for i in 0..40 {
            let t = 0.05 + i as f64 * 0.1;
            // Fourth-order central difference.
            let d = (-fam.psi_r(t + 2.0 * eps) + 8.0 * fam.psi_r(t + eps) - 8.0 * fam.psi_r(t - eps)
                + fam.psi_r(t - 2.0 * eps))
                / (12.0 * eps);
            assert!((d + fam.eta_r(t)).abs() < 1e-10, "t = {t}: {d} vs {}", fam.eta_r(t));
        }
    }

    #[test]
    fn family_scaling() {
        let fam = TestFamily::new(1, 0.5, 1.5, 16.0, 2.0).unwrap();
        assert_eq!(fam.sigma_bar, 0.5);
        assert_eq!(fam.horizon(), 4.0);
        assert_eq!(fam.spatial_scale(), 32.0);
        assert_eq!(fam.phi_r(&[31.0]), 1.0);
        assert!(fam.phi_r(&[40.0]) < 1.0);
        assert!(TestFamily::new(1, 0.5, 1.5, 0.5, 1.0).is_err());
        assert!(TestFamily::new(1, 2.5, 1.5, 2.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn phi_in_unit_interval_and_nonincreasing(r1 in 0.0f64..50.0, r2 in 0.0f64..50.0, s in 0.05f64..1.0) {
            let c = SpatialCutoff::new(1, s).unwrap();
            let (a, b) = (r1.min(r2), r1.max(r2));
            prop_assert!(c.radial(a) > 0.0 && c.radial(a) <= 1.0);
            prop_assert!(c.radial(b) <= c.radial(a));
        }

        #[test]
        fn eta_and_psi_monotone(t1 in 0.0f64..20.0, t2 in 0.0f64..20.0, p in 1.05f64..4.0) {
            let fam = TestFamily::new(1, 1.0, p, 8.0, 1.0).unwrap();
            let (a, b) = (t1.min(t2), t1.max(t2));
            prop_assert!(fam.eta_r(b) <= fam.eta_r(a));
            prop_assert!(fam.psi_r(b) <= fam.psi_r(a) + 1e-15);
        }
    }

    #[test]
    fn psi_dominated_by_eta_times_remaining_time() {
        let fam = TestFamily::new(1, 1.0, 1.5, 8.0, 1.0).unwrap();
        let top = fam.horizon();
        for i in 0..=10_000 {
            let t = top / 2.0 + (top / 2.0) * i as f64 / 10_000.0;
            assert!(fam.psi_r(t) <= fam.eta_r(t) * (top - t) * (1.0 + 1e-12) + 1e-300);
        }
        for i in 0..1000 {
            let t = 1.3 + i as f64 * 1e-3;
            assert!(fam.psi_r(t) >= 0.0);
        }
        // supp η_R ⊆ [0, R^{σ̄}] exactly.
        assert_eq!(fam.eta_r(top), 0.0);
        assert_eq!(fam.psi_r(top), 0.0);
    }
}
