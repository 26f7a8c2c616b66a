//! Exact substeps of the splitting: the damped-oscillator flow of each
//! Fourier mode and the pointwise flow of `v' = |v|^p`.

/// Relative discriminant below which the two eigenvalues are treated as equal.
const REPEATED_THRESHOLD: f64 = 1e-12;

pub type Matrix2 = [[f64; 2]; 2];

/// `exp(dt A)` for `A = [[0, 1], [-κ², -μκ^σ]]`, acting on `(û, v̂)`.
pub fn linear_propagator(kappa: f64, dt: f64, mu: f64, sigma: f64) -> Matrix2 {
    let damping = if sigma == 2.0 {
        mu * kappa * kappa
    } else {
        mu * kappa.powf(sigma)
    };
    oscillator_exp(kappa * kappa, damping, dt)
}

/// `exp(t [[0, 1], [-c, -b]])` with `b, c >= 0`.
pub(crate) fn oscillator_exp(c: f64, b: f64, t: f64) -> Matrix2 {
    if c == 0.0 && b == 0.0 {
        return [[1.0, t], [0.0, 1.0]];
    }
    let disc = b * b - 4.0 * c;
    let alpha = -0.5 * b;
    // A - αI
    let shifted = [[0.5 * b, 1.0], [-c, -0.5 * b]];
    let combine = |diag: f64, off: f64, scale: f64| -> Matrix2 {
        [
            [scale * (diag + off * shifted[0][0]), scale * off * shifted[0][1]],
            [scale * off * shifted[1][0], scale * (diag + off * shifted[1][1])],
        ]
    };
    if disc.abs() <= REPEATED_THRESHOLD * (b * b + 4.0 * c) {
        return combine(1.0, t, (alpha * t).exp());
    }
    if disc < 0.0 {
        let omega = 0.5 * (-disc).sqrt();
        let (sin, cos) = (omega * t).sin_cos();
        return combine(cos, sin / omega, (alpha * t).exp());
    }
    let root = disc.sqrt();
    let omega = 0.5 * root;
    if omega * t <= 1.0 {
        return combine((omega * t).cosh(), (omega * t).sinh() / omega, (alpha * t).exp());
    }
    // Well separated real eigenvalues; the slow one is formed without
    // cancellation.
    let slow = -2.0 * c / (b + root);
    let fast = -0.5 * (b + root);
    let (es, ef) = ((slow * t).exp(), (fast * t).exp());
    let gap = slow - fast;
    [
        [(slow * ef - fast * es) / gap, (es - ef) / gap],
        [-c * (es - ef) / gap, (slow * es - fast * ef) / gap],
    ]
}

/// Outcome of the pointwise nonlinear flow over one substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Substep {
    Value(f64),
    /// The solution escapes after `after` time units into the substep.
    BlowUp { after: f64 },
}

/// Solves `v' = |v|^p`, `v(0) = v0`, up to time `dt`.
pub fn nonlinear_substep(v0: f64, dt: f64, p: f64) -> Substep {
    PowerFlow::new(p).advance(v0, dt)
}

/// `|v|^q` and `x^{-1/q}` for a fixed `q = p - 1`, with closed forms for the
/// common exponents so the pointwise substep avoids `powf`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PowerFlow {
    q: f64,
    kind: PowerKind,
}

#[derive(Debug, Clone, Copy)]
enum PowerKind {
    Quarter,
    Half,
    One,
    Two,
    Three,
    General,
}

impl PowerFlow {
    pub(crate) fn new(p: f64) -> Self {
        let q = p - 1.0;
        let kind = match q {
            x if x == 0.25 => PowerKind::Quarter,
            x if x == 0.5 => PowerKind::Half,
            x if x == 1.0 => PowerKind::One,
            x if x == 2.0 => PowerKind::Two,
            x if x == 3.0 => PowerKind::Three,
            _ => PowerKind::General,
        };
        Self { q, kind }
    }

    fn pow_q(&self, a: f64) -> f64 {
        match self.kind {
            PowerKind::Quarter => a.sqrt().sqrt(),
            PowerKind::Half => a.sqrt(),
            PowerKind::One => a,
            PowerKind::Two => a * a,
            PowerKind::Three => a * a * a,
            PowerKind::General => a.powf(self.q),
        }
    }

    /// `x^{-1/q}` for `x > 0`.
    fn inv_root(&self, x: f64) -> f64 {
        match self.kind {
            PowerKind::Quarter => {
                let y = x * x;
                1.0 / (y * y)
            }
            PowerKind::Half => 1.0 / (x * x),
            PowerKind::One => 1.0 / x,
            PowerKind::Two => 1.0 / x.sqrt(),
            PowerKind::Three => 1.0 / x.cbrt(),
            PowerKind::General => x.powf(-1.0 / self.q),
        }
    }

    pub(crate) fn advance(&self, v0: f64, dt: f64) -> Substep {
        let q = self.q;
        if v0 > 0.0 {
            let w = self.pow_q(v0);
            let shrink = 1.0 - q * dt * w;
            if shrink <= 0.0 {
                Substep::BlowUp { after: 1.0 / (q * w) }
            } else {
                Substep::Value(v0 * self.inv_root(shrink))
            }
        } else if v0 < 0.0 {
            let a = -v0;
            Substep::Value(-a * self.inv_root(1.0 + q * dt * self.pow_q(a)))
        } else {
            Substep::Value(v0)
        }
    }
}
