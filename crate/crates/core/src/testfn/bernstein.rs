//! Polynomials on `[0, 1]` in the Bernstein basis. Products and
//! antiderivatives of nonnegative coefficient vectors stay nonnegative, so
//! high powers of the smoothstep evaluate without cancellation.

#[derive(Debug, Clone, PartialEq)]
pub struct Bernstein {
    coeffs: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl Bernstein {
    pub fn new(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "Bernstein polynomial needs a coefficient");
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mul(&self, other: &Bernstein) -> Bernstein {
        let (n, m) = (self.degree(), other.degree());
        let mut out = vec![0.0; n + m + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            let ci = binomial(n, i);
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b * ci * binomial(m, j);
            }
        }
        for (k, c) in out.iter_mut().enumerate() {
            *c /= binomial(n + m, k);
        }
        Bernstein::new(out)
    }

    pub fn powi(&self, m: u32) -> Bernstein {
        let mut acc = Bernstein::new(vec![1.0]);
        for _ in 0..m {
            acc = acc.mul(self);
        }
        acc
    }

    /// `u ↦ ∫_0^u p`.
    pub fn antiderivative(&self) -> Bernstein {
        let scale = 1.0 / (self.degree() + 1) as f64;
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        let mut running = 0.0;
        out.push(0.0);
        for c in &self.coeffs {
            running += c;
            out.push(running * scale);
        }
        Bernstein::new(out)
    }

    /// De Casteljau evaluation.
    pub fn eval(&self, u: f64) -> f64 {
        let mut work = self.coeffs.clone();
        let n = work.len();
        for r in 1..n {
            for i in 0..n - r {
                work[i] = (1.0 - u) * work[i] + u * work[i + 1];
            }
        }
        work[0]
    }
}
