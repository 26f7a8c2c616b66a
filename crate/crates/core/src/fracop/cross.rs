use serde::Serialize;

use super::function::PointFunction;
use super::quadrature::{FracQuadrature, QuadratureSettings};
use super::spectral::FracSpectral;
use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, Serialize)]
pub struct CrossReport {
    pub sigma: f64,
    pub probes: Vec<Vec<f64>>,
    pub spectral: Vec<f64>,
    pub quadrature: Vec<f64>,
    pub tail_bounds: Vec<f64>,
    /// Discrepancies relative to the largest quadrature magnitude over the
    /// probes (absolute when every probe value is zero).
    pub max_relative: f64,
    pub mean_relative: f64,
}

/// Compares the periodic multiplier with the whole-space quadrature at the
/// probe points. Thresholds are left to the caller.
pub fn cross_validate(
    field: &Field,
    function: &dyn PointFunction,
    sigma: f64,
    settings: QuadratureSettings,
    probes: &[Vec<f64>],
) -> Result<CrossReport> {
    if !(sigma > 0.0 && sigma < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "cross validation needs sigma in (0, 2), got {sigma}"
        )));
    }
    let dim = field.spec().dim();
    let spectral = FracSpectral::new(*field.spec(), sigma)?.evaluate_at(field, probes)?;
    let quad = FracQuadrature::new(dim, sigma / 2.0, settings)?;
    let mut quadrature = Vec::with_capacity(probes.len());
    let mut tail_bounds = Vec::with_capacity(probes.len());
    for x in probes {
        let q = quad.apply(function, x)?;
        quadrature.push(q.value);
        tail_bounds.push(q.tail_bound);
    }
    let scale = quadrature.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let rel: Vec<f64> = spectral
        .iter()
        .zip(&quadrature)
        .map(|(a, b)| (a - b).abs() / scale)
        .collect();
    let max_relative = rel.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mean_relative = if rel.is_empty() {
        0.0
    } else {
        rel.iter().sum::<f64>() / rel.len() as f64
    };
    Ok(CrossReport {
        sigma,
        probes: probes.to_vec(),
        spectral,
        quadrature,
        tail_bounds,
        max_relative,
        mean_relative,
    })
}
