//! Discrete Fourier machinery shared by the fractional-Laplacian multiplier
//! and the pseudospectral solver.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{Field, GridSpec};

/// Forward/inverse transforms on a [`GridSpec`]. Plans are shared, scratch
/// buffers are allocated per call so one plan can serve concurrent callers.
#[derive(Clone)]
pub struct SpectralPlan {
    spec: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
}

impl std::fmt::Debug for SpectralPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralPlan").field("spec", &self.spec).finish()
    }
}

impl SpectralPlan {
    pub fn new(spec: GridSpec) -> Self {
        let n = spec.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let l = spec.half_width();
        let wavenumbers = (0..n)
            .map(|j| std::f64::consts::PI * signed_index(j, n) as f64 / l)
            .collect();
        Self {
            spec,
            forward,
            inverse,
            wavenumbers,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Angular wavenumbers `pi k / L` in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// `|xi|^2` for every stored mode (flat index matches [`GridSpec::point`]).
    pub fn squared_moduli(&self) -> Vec<f64> {
        let n = self.spec.points_per_axis();
        let k = &self.wavenumbers;
        match self.spec.dim() {
            1 => k.iter().map(|x| x * x).collect(),
            _ => (0..n * n)
                .map(|i| {
                    let (a, b) = (k[i / n], k[i % n]);
                    a * a + b * b
                })
                .collect(),
        }
    }

    pub fn forward(&self, field: &Field) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = field
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        self.transform(&mut buf, &self.forward);
        buf
    }

    /// Unnormalized forward transform of a complex buffer.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.forward);
    }

    /// Flat index of the mode `-k` for the mode stored at `idx`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.spec.points_per_axis();
        let flip = |j: usize| (n - j) % n;
        match self.spec.dim() {
            1 => flip(idx),
            _ => flip(idx / n) * n + flip(idx % n),
        }
    }

    /// Unnormalized inverse transform followed by division by `N^n`.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.inverse);
        let scale = 1.0 / self.spec.len() as f64;
        for z in buf.iter_mut() {
            *z *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.spec.points_per_axis();
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        if self.spec.dim() == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for c in 0..n {
                for r in 0..n {
                    column[r] = buf[r * n + c];
                }
                plan.process_with_scratch(&mut column, &mut scratch);
                for r in 0..n {
                    buf[r * n + c] = column[r];
                }
            }
        }
    }

    /// Applies a real Fourier multiplier and returns the real part, together
    /// with the largest discarded imaginary residue.
    pub fn apply_multiplier(&self, field: &Field, multiplier: &[f64]) -> (Field, f64) {
        let mut buf = self.forward(field);
        for (z, &m) in buf.iter_mut().zip(multiplier) {
            *z *= m;
        }
        self.inverse_in_place(&mut buf);
        let residue = buf.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
        let values = buf.iter().map(|z| z.re).collect();
        (
            Field::from_values(self.spec, values).expect("matching length"),
            residue,
        )
    }

    /// Evaluates the trigonometric interpolant of already-transformed
    /// coefficients at an arbitrary point. The Nyquist mode enters as a cosine
    /// so real data yields a real interpolant.
    pub fn evaluate_series(&self, coeffs: &[Complex64], x: &[f64]) -> f64 {
        let n = self.spec.points_per_axis();
        let l = self.spec.half_width();
        let phase = |j: usize, c: f64| -> (f64, bool) {
            let k = signed_index(j, n);
            (std::f64::consts::PI * k as f64 * (c + l) / l, k == -(n as i64) / 2)
        };
        let mut total = 0.0;
        match self.spec.dim() {
            1 => {
                for (j, z) in coeffs.iter().enumerate() {
                    let (th, nyq) = phase(j, x[0]);
                    total += if nyq { z.re * th.cos() } else { (z * Complex64::from_polar(1.0, th)).re };
                }
            }
            _ => {
                for r in 0..n {
                    let (tr, nr) = phase(r, x[0]);
                    for c in 0..n {
                        let (tc, nc) = phase(c, x[1]);
                        let z = coeffs[r * n + c];
                        total += match (nr, nc) {
                            (false, false) => (z * Complex64::from_polar(1.0, tr + tc)).re,
                            (true, false) => tr.cos() * (z * Complex64::from_polar(1.0, tc)).re,
                            (false, true) => tc.cos() * (z * Complex64::from_polar(1.0, tr)).re,
                            (true, true) => z.re * tr.cos() * tc.cos(),
                        };
                    }
                }
            }
        }
        total / self.spec.len() as f64
    }
}

/// FFT storage index to signed frequency in `[-N/2, N/2)`.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_2d() {
        let g = GridSpec::new(2, 3.0, 16).unwrap();
        let f = Field::sample(g, |x| (x[0] - 0.3 * x[1]).sin() + x[1].cos()).unwrap();
        let plan = SpectralPlan::new(g);
        let mut buf = plan.forward(&f);
        plan.inverse_in_place(&mut buf);
        for (z, v) in buf.iter().zip(f.values()) {
            assert!((z.re - v).abs() < 1e-13 && z.im.abs() < 1e-13);
        }
    }

    #[test]
    fn series_interpolates_lattice_values() {
        let g = GridSpec::new(1, 2.0, 32).unwrap();
        let f = Field::sample(g, |x| (-(x[0] * x[0])).exp() + 0.1 * (8.0 * x[0]).cos()).unwrap();
        let plan = SpectralPlan::new(g);
        let coeffs = plan.forward(&f);
        for (i, p) in g.points().enumerate().step_by(5) {
            assert!((plan.evaluate_series(&coeffs, &p[..1]) - f.values()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn series_interpolates_2d_lattice_values() {
        let g = GridSpec::new(2, 2.0, 8).unwrap();
        let f = Field::sample(g, |x| 1.0 + x[0] * 0.2 - (x[1] * x[0]).sin()).unwrap();
        let plan = SpectralPlan::new(g);
        let coeffs = plan.forward(&f);
        for (i, p) in g.points().enumerate().step_by(7) {
            assert!((plan.evaluate_series(&coeffs, &p) - f.values()[i]).abs() < 1e-12);
        }
    }
}
