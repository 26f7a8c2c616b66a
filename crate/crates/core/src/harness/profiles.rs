//! Initial-data profiles. Each is a named strategy behind [`DataProfile`],
//! built from a [`ProfileSpec`] through a [`ProfileRegistry`].

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

/// Smooth bump `e · exp(-1/(1-|y|^2))` on the unit ball, peak value 1.
pub fn unit_bump(y2: f64) -> f64 {
    if y2 < 1.0 {
        (1.0 - 1.0 / (1.0 - y2)).exp()
    } else {
        0.0
    }
}

fn bump_at(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let y2 = x
        .iter()
        .zip(center.iter().chain(std::iter::repeat(&0.0)))
        .map(|(a, c)| (a - c) * (a - c))
        .sum::<f64>()
        / (radius * radius);
    unit_bump(y2)
}

/// Analytic description of a profile, as echoed into manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub kind: String,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    /// `u_0` lobe height relative to the `u_1` amplitude.
    #[serde(default)]
    pub u0_scale: f64,
    /// Distance of the two `u_0` lobes from the centre.
    #[serde(default = "default_offset")]
    pub lobe_offset: f64,
}

fn default_radius() -> f64 {
    1.0
}

fn default_offset() -> f64 {
    1.0
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            kind: "bump".into(),
            radius: default_radius(),
            center: Vec::new(),
            u0_scale: 0.0,
            lobe_offset: default_offset(),
        }
    }
}

impl ProfileSpec {
    /// Parses `kind[:key=value,...]`, e.g. `signed_u0:radius=1,u0_scale=0.5`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut spec = ProfileSpec {
            kind: kind.trim().to_string(),
            ..ProfileSpec::default()
        };
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got `{item}`")))?;
            let num = |v: &str| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("`{key}` needs a number, got `{v}`")))
            };
            match key.trim() {
                "radius" => spec.radius = num(value)?,
                "u0_scale" => spec.u0_scale = num(value)?,
                "lobe_offset" => spec.lobe_offset = num(value)?,
                "center" => {
                    spec.center = value.split(';').map(num).collect::<Result<Vec<_>>>()?;
                }
                other => {
                    return Err(Error::InvalidConfig(format!("unknown profile key `{other}`")));
                }
            }
        }
        Ok(spec)
    }

    /// Radius of a ball that contains both data supports.
    pub fn support_radius(&self) -> f64 {
        let c = self.center.iter().map(|x| x * x).sum::<f64>().sqrt();
        let lobes = if self.u0_scale != 0.0 {
            self.lobe_offset
        } else {
            0.0
        };
        c + lobes + self.radius
    }
}

pub trait DataProfile: Send + Sync {
    fn name(&self) -> &str;

    /// `(u_0, u_1)` at the given amplitude.
    fn initial_data(&self, grid: GridSpec, amplitude: f64) -> Result<(Field, Field)>;

    /// Whether `u_1` has positive mass by construction.
    fn positive_mass(&self) -> bool;
}

/// `u_0 = 0`, `u_1` a single non-negative bump.
#[derive(Debug, Clone)]
pub struct Bump {
    spec: ProfileSpec,
}

impl DataProfile for Bump {
    fn name(&self) -> &str {
        "bump"
    }

    fn initial_data(&self, grid: GridSpec, amplitude: f64) -> Result<(Field, Field)> {
        let u1 = Field::sample(grid, |x| amplitude * bump_at(x, &self.spec.center, self.spec.radius))?;
        Ok((Field::zeros(grid), u1))
    }

    fn positive_mass(&self) -> bool {
        true
    }
}

/// `u_1` a non-negative bump and `u_0` an antisymmetric pair of lobes along
/// the first axis (positive on the right, negative on the left).
#[derive(Debug, Clone)]
pub struct SignedU0 {
    spec: ProfileSpec,
}

impl DataProfile for SignedU0 {
    fn name(&self) -> &str {
        "signed_u0"
    }

    fn initial_data(&self, grid: GridSpec, amplitude: f64) -> Result<(Field, Field)> {
        let s = &self.spec;
        let shifted = |sign: f64| -> Vec<f64> {
            let mut c = s.center.clone();
            c.resize(grid.dim(), 0.0);
            c[0] += sign * s.lobe_offset;
            c
        };
        let (right, left) = (shifted(1.0), shifted(-1.0));
        let u0 = Field::sample(grid, |x| {
            amplitude * s.u0_scale * (bump_at(x, &right, s.radius) - bump_at(x, &left, s.radius))
        })?;
        let u1 = Field::sample(grid, |x| amplitude * bump_at(x, &s.center, s.radius))?;
        Ok((u0, u1))
    }

    fn positive_mass(&self) -> bool {
        true
    }
}

type Builder = fn(&ProfileSpec) -> Result<Box<dyn DataProfile>>;

pub struct ProfileRegistry {
    builders: BTreeMap<String, Builder>,
}

impl ProfileRegistry {
    pub fn empty() -> Self {
        Self {
            builders: BTreeMap::new(),
        }
    }

    pub fn with_builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("bump", |spec| Ok(Box::new(Bump { spec: spec.clone() })));
        reg.register("signed_u0", |spec| {
            if spec.u0_scale == 0.0 {
                return Err(Error::InvalidConfig("signed_u0 needs a non-zero u0_scale".into()));
            }
            Ok(Box::new(SignedU0 { spec: spec.clone() }))
        });
        reg
    }

    pub fn register(&mut self, name: &str, builder: Builder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn build(&self, spec: &ProfileSpec) -> Result<Box<dyn DataProfile>> {
        if !(spec.radius > 0.0 && spec.radius.is_finite()) {
            return Err(Error::InvalidConfig(format!("profile radius must be positive, got {}", spec.radius)));
        }
        let builder = self.builders.get(&spec.kind).ok_or_else(|| Error::UnknownName {
            kind: "profile",
            name: spec.kind.clone(),
            known: self.names().join(", "),
        })?;
        builder(spec)
    }
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::with_builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let s = ProfileSpec::parse("signed_u0:radius=2,u0_scale=0.5,center=1;0").unwrap();
        assert_eq!(s.kind, "signed_u0");
        assert_eq!(s.radius, 2.0);
        assert_eq!(s.u0_scale, 0.5);
        assert_eq!(s.center, vec![1.0, 0.0]);
        assert!(ProfileSpec::parse("bump:width=3").is_err());
        assert_eq!(ProfileSpec::parse("bump").unwrap(), ProfileSpec::default());
    }

    #[test]
    fn registry_lookup() {
        let reg = ProfileRegistry::default();
        assert_eq!(reg.names(), vec!["bump", "signed_u0"]);
        let err = reg.build(&ProfileSpec::parse("ring").unwrap()).err().unwrap();
        assert!(matches!(err, Error::UnknownName { .. }));
    }

    #[test]
    fn signed_data_has_both_signs_and_positive_mass() {
        let grid = GridSpec::new(1, 16.0, 1024).unwrap();
        let spec = ProfileSpec::parse("signed_u0:u0_scale=1").unwrap();
        let (u0, u1) = ProfileRegistry::default().build(&spec).unwrap().initial_data(grid, 2.0).unwrap();
        let (lo, hi) = u0.values().iter().fold((0.0_f64, 0.0_f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(lo < -1.0 && hi > 1.0);
        assert!(u0.integrate().abs() < 1e-12);
        assert!(u1.integrate() > 1.0);
        assert_eq!(u1.sup(), 2.0);
    }
}
