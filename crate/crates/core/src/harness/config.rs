//! Strict TOML configuration shared by the command-line subcommands. Every
//! key present in the file replaces the corresponding flag value.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub grid: Option<GridSection>,
    pub solver: Option<SolverSection>,
    pub data: Option<DataSection>,
    pub sweep: Option<SweepSection>,
    pub certify: Option<CertifySection>,
    pub lemmas: Option<LemmaSection>,
    pub operator: Option<OperatorSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: Option<usize>,
    pub half_width: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub dt: Option<f64>,
    pub t_max: Option<f64>,
    pub store_stride: Option<usize>,
    pub blowup_threshold: Option<f64>,
    pub decay_epsilon: Option<f64>,
    pub linear: Option<bool>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub profile: Option<String>,
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigma_list: Option<Vec<f64>>,
    pub p_list: Option<Vec<f64>>,
    pub amplitude_list: Option<Vec<f64>>,
    pub reference_amplitude: Option<f64>,
    pub workers: Option<usize>,
    pub theorem_regime: Option<bool>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifySection {
    pub traj: Option<String>,
    pub r_list: Option<Vec<f64>>,
    pub k_list: Option<Vec<f64>>,
    pub p: Option<f64>,
    pub sigma: Option<f64>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaSection {
    pub n: Option<usize>,
    pub sigma: Option<f64>,
    pub p: Option<f64>,
    pub r_list: Option<Vec<f64>>,
    pub points: Option<usize>,
    pub half_width: Option<f64>,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSection {
    pub method: Option<String>,
    pub sigma: Option<f64>,
    pub probes: Option<Vec<f64>>,
    pub input: Option<String>,
    pub output: Option<String>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        Self::parse(&text).map_err(|e| match e {
            Error::InvalidConfig(m) => Error::InvalidConfig(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

/// Replaces `slot` with the config value when one is present.
pub fn overlay<T: Clone>(slot: &mut T, value: &Option<T>) {
    if let Some(v) = value {
        *slot = v.clone();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sections() {
        let cfg = FileConfig::parse(
            "[grid]\npoints = 1024\nhalf_width = 32.0\n\n[solver]\nsigma = 0.5\np = 1.5\n\n[sweep]\np_list = [1.5, 2.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.grid.as_ref().unwrap().points, Some(1024));
        assert_eq!(cfg.solver.as_ref().unwrap().sigma, Some(0.5));
        assert_eq!(cfg.sweep.unwrap().p_list, Some(vec![1.5, 2.0]));
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(FileConfig::parse("[solver]\nsigmaa = 1.0\n").is_err());
        assert!(FileConfig::parse("[solvers]\nsigma = 1.0\n").is_err());
        assert!(FileConfig::parse("top = 1\n").is_err());
    }

    #[test]
    fn overlay_replaces_only_present_values() {
        let mut x = 1.0;
        overlay(&mut x, &None);
        assert_eq!(x, 1.0);
        overlay(&mut x, &Some(2.0));
        assert_eq!(x, 2.0);
    }
}
