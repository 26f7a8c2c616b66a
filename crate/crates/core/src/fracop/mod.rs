//! The fractional Laplacian `(-Δ)^{σ/2}`, realized twice: as a Fourier
//! multiplier on the periodic lattice and as a principal-value singular
//! integral evaluated by quadrature. The two paths share no code and are
//! used as each other's oracle (see [`cross_validate`]).
//!
//! Both paths sit behind [`FractionalLaplacian`] and are looked up by name
//! in an [`OperatorRegistry`].

mod cross;
mod function;
mod quadrature;
mod spectral;

use std::collections::BTreeMap;

pub use cross::{cross_validate, CrossReport};
pub use function::{FieldInterpolant, FnPoint, PointFunction};
pub use quadrature::{
    gauss_legendre, normalization_constant, FracQuadrature, QuadratureSettings, QuadratureValue,
};
pub use spectral::{spectral_apply, spectral_laplacian, FracSpectral};

use crate::error::{Error, Result};
use crate::grid::Field;

/// What an operator may be applied to. The spectral path needs lattice
/// samples; the quadrature path needs pointwise evaluation and falls back to
/// interpolating the samples when no closed form is supplied.
#[derive(Clone, Copy)]
pub struct Operand<'a> {
    pub field: Option<&'a Field>,
    pub function: Option<&'a dyn PointFunction>,
}

impl<'a> Operand<'a> {
    pub fn field(field: &'a Field) -> Self {
        Self {
            field: Some(field),
            function: None,
        }
    }

    pub fn both(field: &'a Field, function: &'a dyn PointFunction) -> Self {
        Self {
            field: Some(field),
            function: Some(function),
        }
    }

    pub fn function(function: &'a dyn PointFunction) -> Self {
        Self {
            field: None,
            function: Some(function),
        }
    }
}

/// A method for evaluating `(-Δ)^{σ/2}`.
pub trait FractionalLaplacian: Send + Sync {
    fn name(&self) -> &'static str;

    /// Values of `(-Δ)^{σ/2} f` at the probe points (each of length `dim`).
    fn at_points(&self, operand: Operand<'_>, sigma: f64, probes: &[Vec<f64>]) -> Result<Vec<f64>>;

    /// `(-Δ)^{σ/2} f` at every lattice point of the operand's grid.
    fn on_grid(&self, operand: Operand<'_>, sigma: f64) -> Result<Field> {
        let field = operand.field.ok_or_else(|| {
            Error::InvalidParameter(format!("method `{}` needs a sampled field", self.name()))
        })?;
        let spec = *field.spec();
        let probes: Vec<Vec<f64>> = spec.points().map(|p| p[..spec.dim()].to_vec()).collect();
        let values = self.at_points(operand, sigma, &probes)?;
        Field::from_values(spec, values)
    }
}

pub struct SpectralMethod;

impl FractionalLaplacian for SpectralMethod {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn at_points(&self, operand: Operand<'_>, sigma: f64, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let field = operand
            .field
            .ok_or_else(|| Error::InvalidParameter("spectral method needs a sampled field".into()))?;
        let op = FracSpectral::new(*field.spec(), sigma)?;
        op.evaluate_at(field, probes)
    }

    fn on_grid(&self, operand: Operand<'_>, sigma: f64) -> Result<Field> {
        let field = operand
            .field
            .ok_or_else(|| Error::InvalidParameter("spectral method needs a sampled field".into()))?;
        spectral_apply(field, sigma)
    }
}

pub struct QuadratureMethod {
    pub settings: QuadratureSettings,
}

impl FractionalLaplacian for QuadratureMethod {
    fn name(&self) -> &'static str {
        "quadrature"
    }

    fn at_points(&self, operand: Operand<'_>, sigma: f64, probes: &[Vec<f64>]) -> Result<Vec<f64>> {
        let interpolant;
        let (function, dim): (&dyn PointFunction, usize) = match (operand.function, operand.field) {
            (Some(f), Some(field)) => (f, field.spec().dim()),
            (Some(f), None) => (f, probes.first().map_or(1, Vec::len)),
            (None, Some(field)) => {
                interpolant = FieldInterpolant::new(field.clone());
                (&interpolant, field.spec().dim())
            }
            (None, None) => return Err(Error::InvalidParameter("empty operand".into())),
        };
        let q = FracQuadrature::new(dim, sigma / 2.0, self.settings)?;
        probes
            .iter()
            .map(|x| q.apply(function, x).map(|v| v.value))
            .collect()
    }
}

/// Name-keyed collection of operator implementations.
pub struct OperatorRegistry {
    methods: BTreeMap<&'static str, Box<dyn FractionalLaplacian>>,
}

impl OperatorRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    /// The spectral and quadrature methods, the latter with `settings`.
    pub fn with_builtin(settings: QuadratureSettings) -> Self {
        let mut r = Self::empty();
        r.register(Box::new(SpectralMethod));
        r.register(Box::new(QuadratureMethod { settings }));
        r
    }

    pub fn register(&mut self, method: Box<dyn FractionalLaplacian>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn FractionalLaplacian> {
        self.methods
            .get(name)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "operator method",
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.methods.keys().copied().collect()
    }
}

impl Default for OperatorRegistry {
    fn default() -> Self {
        Self::with_builtin(QuadratureSettings::default())
    }
}
