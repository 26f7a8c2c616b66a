//! Time quadrature over stored snapshots.

/// Weights `w_i` such that `Σ w_i g(t_i)` integrates the piecewise-linear
/// interpolant of `g` over `[a, b]`. All weights are non-negative.
pub fn window_weights(times: &[f64], a: f64, b: f64) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for (i, seg) in times.windows(2).enumerate() {
        let (t0, t1) = (seg[0], seg[1]);
        let (lo, hi) = (t0.max(a), t1.min(b));
        if hi <= lo {
            continue;
        }
        let len = t1 - t0;
        // Barycentric weights of the clipped sub-interval's midpoint.
        let mid = 0.5 * (lo + hi);
        let span = hi - lo;
        let right = (mid - t0) / len;
        w[i] += span * (1.0 - right);
        w[i + 1] += span * right;
    }
    w
}

/// Same weights built on every `stride`-th snapshot, scattered back to the
/// full index set (zero elsewhere). Used for Richardson error estimates.
pub fn coarse_weights(times: &[f64], a: f64, b: f64, stride: usize) -> Vec<f64> {
    let picked: Vec<usize> = (0..times.len()).step_by(stride).collect();
    let sub: Vec<f64> = picked.iter().map(|&i| times[i]).collect();
    let ws = window_weights(&sub, a, b);
    let mut out = vec![0.0; times.len()];
    for (&i, w) in picked.iter().zip(ws) {
        out[i] = w;
    }
    out
}
