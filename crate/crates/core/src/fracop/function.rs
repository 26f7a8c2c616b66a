use crate::grid::Field;

/// A pointwise function on `R^n` that the quadrature path can evaluate.
pub trait PointFunction: Sync {
    fn eval(&self, x: &[f64]) -> f64;

    /// Upper bound on `|f|`, used for the far-field tail estimate.
    fn sup_abs(&self) -> f64;

    /// Radii `|y|` across which `f` loses smoothness. The quadrature splits
    /// its panels there.
    fn radial_breaks(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// Wraps a closure together with its sup bound.
pub struct FnPoint<F> {
    f: F,
    sup: f64,
    breaks: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnPoint<F> {
    pub fn new(f: F, sup: f64) -> Self {
        Self {
            f,
            sup,
            breaks: Vec::new(),
        }
    }

    pub fn with_breaks(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> PointFunction for FnPoint<F> {
    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn sup_abs(&self) -> f64 {
        self.sup
    }

    fn radial_breaks(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Cubic-convolution interpolant of lattice samples, zero outside the box.
pub struct FieldInterpolant {
    field: Field,
    sup: f64,
}

impl FieldInterpolant {
    pub fn new(field: Field) -> Self {
        let sup = field.sup();
        Self { field, sup }
    }

    fn sample(&self, idx: [i64; 2]) -> f64 {
        let spec = self.field.spec();
        let n = spec.points_per_axis() as i64;
        if idx[..spec.dim()].iter().any(|&i| i < 0 || i >= n) {
            return 0.0;
        }
        let flat = match spec.dim() {
            1 => idx[0],
            _ => idx[0] * n + idx[1],
        };
        self.field.values()[flat as usize]
    }
}

/// Keys cubic convolution kernel weights for fractional offset `t` in `[0,1)`.
fn keys_weights(t: f64) -> [f64; 4] {
    let a = -0.5;
    let w = |x: f64| {
        let x = x.abs();
        if x <= 1.0 {
            (a + 2.0) * x * x * x - (a + 3.0) * x * x + 1.0
        } else if x < 2.0 {
            a * x * x * x - 5.0 * a * x * x + 8.0 * a * x - 4.0 * a
        } else {
            0.0
        }
    };
    [w(1.0 + t), w(t), w(1.0 - t), w(2.0 - t)]
}

impl PointFunction for FieldInterpolant {
    fn eval(&self, x: &[f64]) -> f64 {
        let spec = self.field.spec();
        let l = spec.half_width();
        let h = spec.spacing();
        if x.iter().any(|c| c.abs() > l) {
            return 0.0;
        }
        let locate = |c: f64| {
            let u = (c + l) / h;
            let base = u.floor();
            (base as i64, u - base)
        };
        match spec.dim() {
            1 => {
                let (i, t) = locate(x[0]);
                keys_weights(t)
                    .iter()
                    .enumerate()
                    .map(|(k, w)| w * self.sample([i - 1 + k as i64, 0]))
                    .sum()
            }
            _ => {
                let (i, ti) = locate(x[0]);
                let (j, tj) = locate(x[1]);
                let (wi, wj) = (keys_weights(ti), keys_weights(tj));
                let mut total = 0.0;
                for (a, wa) in wi.iter().enumerate() {
                    for (b, wb) in wj.iter().enumerate() {
                        total += wa * wb * self.sample([i - 1 + a as i64, j - 1 + b as i64]);
                    }
                }
                total
            }
        }
    }

    fn sup_abs(&self) -> f64 {
        // Cubic convolution can overshoot by at most the kernel's negative lobes.
        1.25 * self.sup
    }
}
