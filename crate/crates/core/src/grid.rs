//! Periodic lattice on the truncated box `[-L, L)^n` and real fields on it.
//!
//! Every integral over the whole space becomes a box integral evaluated by
//! the periodic rectangle rule (weight `h^n` per lattice point), which is
//! spectrally accurate for smooth periodic integrands.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridShape", into = "GridShape")]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    spacing: f64,
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if points_per_axis < 8 || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points_per_axis}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
            spacing: 2.0 * half_width / points_per_axis as f64,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight `h^n` of a single lattice point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn box_measure(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Coordinate `-L + j h` along one axis.
    pub fn axis_coord(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing
    }

    /// Coordinates of the flat lattice index `idx` (row-major in 2D).
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [self.axis_coord(idx), 0.0],
            _ => [self.axis_coord(idx / n), self.axis_coord(idx % n)],
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        let p = self.point(idx);
        p[0].hypot(p[1])
    }

    /// Iterator over all lattice points as slices of length `dim`.
    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Lattice indices in the outer `fraction` of the box, measured in the
    /// sup-distance from the boundary.
    pub fn outer_shell(&self, fraction: f64) -> Vec<usize> {
        let inner = self.half_width * (1.0 - fraction);
        (0..self.len())
            .filter(|&i| {
                let p = self.point(i);
                p[..self.dim].iter().any(|c| c.abs() >= inner)
            })
            .collect()
    }
}

/// Serialized form of a [`GridSpec`]; deserialization revalidates.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridShape {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl TryFrom<GridShape> for GridSpec {
    type Error = Error;

    fn try_from(s: GridShape) -> Result<Self> {
        GridSpec::new(s.dim, s.half_width, s.points_per_axis)
    }
}

impl From<GridSpec> for GridShape {
    fn from(g: GridSpec) -> Self {
        Self {
            dim: g.dim,
            half_width: g.half_width,
            points_per_axis: g.points_per_axis,
        }
    }
}

/// Real samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    spec: GridSpec,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Norm {
    Sup,
    L2,
    Lp(f64),
}

impl Field {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            values: vec![0.0; spec.len()],
            spec,
        }
    }

    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values, grid has {} points",
                values.len(),
                spec.len()
            )));
        }
        Ok(Self { spec, values })
    }

    /// Samples `f` at every lattice point; any non-finite sample is an error.
    pub fn sample<F>(spec: GridSpec, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = spec.dim();
        let mut values = Vec::with_capacity(spec.len());
        for (i, p) in spec.points().enumerate() {
            let v = f(&p[..dim]);
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("sample point {i} ({:?})", &p[..dim]),
                });
            }
            values.push(v);
        }
        Ok(Self { spec, values })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination with another field on the same grid.
    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.spec, other.spec);
        Self {
            spec: self.spec,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Rectangle-rule integral `h^n * sum(values)`.
    pub fn integrate(&self) -> f64 {
        self.spec.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn norm(&self, kind: Norm) -> Result<f64> {
        match kind {
            Norm::Sup => Ok(self.sup()),
            Norm::L2 => Ok((self.spec.cell_volume() * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()),
            Norm::Lp(q) => {
                if !(q >= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Lp norm needs q >= 1, got {q}"
                    )));
                }
                if q == 2.0 {
                    return self.norm(Norm::L2);
                }
                let s: f64 = self.values.iter().map(|v| v.abs().powf(q)).sum();
                Ok((self.spec.cell_volume() * s).powf(1.0 / q))
            }
        }
    }

    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
