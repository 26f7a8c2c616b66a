//! Files written by the sweep and solve commands.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::analysis::{estimate_pc, monotonicity_anomalies, PcEstimate};
use super::sweep::{sweep_csv, SweepPlan, SweepResult};
use crate::error::{io_err, Error, Result};
use crate::evolve::{Diagnostics, NormSample, SimConfig, Trajectory, Verdict};
use crate::grid::{Field, GridSpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn write(path: PathBuf, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Debug, Serialize)]
struct SweepManifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    config_hash: String,
    plan: &'a SweepPlan,
    cells: usize,
    failed_cells: usize,
    estimates: Vec<EstimateEntry>,
    anomalies: Vec<String>,
}

#[derive(Debug, Serialize)]
struct EstimateEntry {
    sigma: f64,
    estimate: Option<PcEstimate>,
    withheld: Option<String>,
}

fn verdict_code(label: &str) -> i32 {
    match label {
        "blow_up" => 1,
        "global_decay" => -1,
        _ => 0,
    }
}

/// Writes `sweep.csv`, `manifest.json` and one `verdict_map_sigma_<σ>.csv`
/// per σ, returning the written paths.
pub fn emit(result: &SweepResult, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = vec![write(out_dir.join("sweep.csv"), sweep_csv(result))?];
    let mut estimates = Vec::new();
    for &s in &result.plan.sigma_list {
        let mut map = String::from("p,amplitude,verdict_code,verdict,t_star\n");
        for c in result.cells.iter().filter(|c| c.sigma == s) {
            map.push_str(&format!(
                "{},{},{},{},{}\n",
                c.p,
                c.amplitude,
                verdict_code(c.verdict_label()),
                c.verdict_label(),
                c.t_star.map(|t| t.to_string()).unwrap_or_default()
            ));
        }
        written.push(write(out_dir.join(format!("verdict_map_sigma_{s}.csv")), map)?);
        let entry = match estimate_pc(result, s) {
            Ok(e) => EstimateEntry {
                sigma: s,
                estimate: Some(e),
                withheld: None,
            },
            Err(e) => EstimateEntry {
                sigma: s,
                estimate: None,
                withheld: Some(e.to_string()),
            },
        };
        estimates.push(entry);
    }
    let manifest = SweepManifest {
        tool: "fwlab",
        tool_version: TOOL_VERSION,
        config_hash: result.plan.config_hash(),
        plan: &result.plan,
        cells: result.cells.len(),
        failed_cells: result.cells.iter().filter(|c| c.error.is_some()).count(),
        estimates,
        anomalies: monotonicity_anomalies(result),
    };
    written.push(write(out_dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?);
    Ok(written)
}

/// On-disk form of a trajectory.
#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryFile {
    config: SimConfig,
    times: Vec<f64>,
    u: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    verdict: Verdict,
    diagnostics: Diagnostics,
    norms: Vec<NormSample>,
}

#[derive(Debug, Serialize)]
struct SolveManifest<'a> {
    tool: &'static str,
    tool_version: &'static str,
    config: &'a SimConfig,
    data: &'a serde_json::Value,
    verdict: Verdict,
    t_star: Option<f64>,
    diagnostics: &'a Diagnostics,
    flags: Vec<&'static str>,
}

pub fn norms_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,sup_v,l2_v,l2_u,energy,mean_v\n");
    for s in &traj.norms {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.t, s.sup_v, s.l2_v, s.l2_u, s.energy, s.mean_v
        ));
    }
    out
}

/// Writes `norms.csv`, `manifest.json` and, when snapshots were kept,
/// `trajectory.json`. `data` is echoed into the manifest.
pub fn write_solve(traj: &Trajectory, data: &serde_json::Value, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let mut written = vec![write(out_dir.join("norms.csv"), norms_csv(traj))?];
    let manifest = SolveManifest {
        tool: "fwlab",
        tool_version: TOOL_VERSION,
        config: &traj.config,
        data,
        verdict: traj.verdict,
        t_star: traj.verdict.t_star(),
        diagnostics: &traj.diagnostics,
        flags: traj.diagnostics.flags(),
    };
    written.push(write(out_dir.join("manifest.json"), serde_json::to_vec_pretty(&manifest)?)?);
    if traj.has_snapshots() {
        let file = TrajectoryFile {
            config: traj.config.clone(),
            times: traj.times.clone(),
            u: traj.u.iter().map(|f| f.values().to_vec()).collect(),
            v: traj.v.iter().map(|f| f.values().to_vec()).collect(),
            verdict: traj.verdict,
            diagnostics: traj.diagnostics.clone(),
            norms: traj.norms.clone(),
        };
        written.push(write(out_dir.join("trajectory.json"), serde_json::to_vec(&file)?)?);
    }
    Ok(written)
}

/// Reads `trajectory.json` from a solve output directory.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let path = dir.join("trajectory.json");
    let bytes = fs::read(&path).map_err(io_err(&path))?;
    let file: TrajectoryFile = serde_json::from_slice(&bytes)?;
    let grid = file.config.grid;
    let fields = |list: Vec<Vec<f64>>| -> Result<Vec<Field>> {
        list.into_iter().map(|v| Field::from_values(grid, v)).collect()
    };
    let u = fields(file.u)?;
    let v = fields(file.v)?;
    if u.len() != file.times.len() || v.len() != file.times.len() {
        return Err(Error::InvalidConfig(format!(
            "{}: {} times but {} u and {} v snapshots",
            path.display(),
            file.times.len(),
            u.len(),
            v.len()
        )));
    }
    Ok(Trajectory {
        config: file.config,
        times: file.times,
        u,
        v,
        norms: file.norms,
        verdict: file.verdict,
        diagnostics: file.diagnostics,
    })
}

/// Lattice samples as CSV: `x,value` in one dimension, `x,y,value` in two.
pub fn field_csv(field: &Field) -> String {
    let spec = field.spec();
    let mut out = String::from(if spec.dim() == 1 { "x,value\n" } else { "x,y,value\n" });
    for (p, v) in spec.points().zip(field.values()) {
        match spec.dim() {
            1 => out.push_str(&format!("{},{}\n", p[0], v)),
            _ => out.push_str(&format!("{},{},{}\n", p[0], p[1], v)),
        }
    }
    out
}

/// Reads a field written by [`field_csv`] (or any CSV with the same
/// columns in lattice order) and recovers its grid.
pub fn read_field_csv(path: &Path) -> Result<Field> {
    let bad = |msg: String| Error::InvalidConfig(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let dim = match headers.iter().collect::<Vec<_>>().as_slice() {
        ["x", "value"] => 1,
        ["x", "y", "value"] => 2,
        other => return Err(bad(format!("expected columns x,value or x,y,value, got {other:?}"))),
    };
    let mut first = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let nums = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| bad(format!("row {}: {e}", row + 1)))?;
        first.push(nums[0]);
        values.push(nums[dim]);
    }
    let total = values.len();
    let n = match dim {
        1 => total,
        _ => (total as f64).sqrt().round() as usize,
    };
    if n == 0 || n.pow(dim as u32) != total {
        return Err(bad(format!("{total} rows do not form a square lattice")));
    }
    let half_width = -first[0];
    let spec = GridSpec::new(dim, half_width, n).map_err(|e| bad(e.to_string()))?;
    let expect_tol = 1e-9 * half_width.max(1.0);
    for (i, (a, p)) in first.iter().zip(spec.points()).enumerate() {
        if (a - p[0]).abs() > expect_tol {
            return Err(bad(format!("row {} has x = {a}, lattice expects {}", i + 1, p[0])));
        }
    }
    Field::from_values(spec, values)
}
