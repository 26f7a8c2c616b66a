//! `fwlab`: command-line front end for the fwlab numerical laboratory.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on
//! an execution error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use fwlab_core::certify::{certify, check_case2_k, rate_chain, CertReport};
use fwlab_core::evolve::{run, SimConfig};
use fwlab_core::fracop::{Operand, OperatorRegistry};
use fwlab_core::harness::config::overlay;
use fwlab_core::harness::{
    emit, estimate_pc, field_csv, read_field_csv, read_trajectory, run_lemma_checks, run_sweep,
    write_solve, FileConfig, LemmaArgs, ProfileRegistry, ProfileSpec, SweepPlan,
};
use fwlab_core::testfn::{sigma_bar, TestFamily};
use fwlab_core::GridSpec;

/// Largest weak-identity residual accepted by `certify`.
const IDENTITY_TOLERANCE: f64 = 1e-2;

#[derive(Parser)]
#[command(name = "fwlab", version, about = "Structurally damped semilinear wave laboratory")]
struct Cli {
    /// TOML file; every key it sets replaces the matching flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Numerical checks of the cutoff lemmas.
    VerifyLemmas(LemmaCmd),
    /// Apply the fractional Laplacian to a field stored as CSV.
    ApplyOp(ApplyCmd),
    /// Run the solver on one data profile.
    Solve(SolveCmd),
    /// Evaluate the test-function functionals on a solve output.
    Certify(CertifyCmd),
    /// Verdict map over (sigma, p, amplitude).
    Sweep(SweepCmd),
}

/// `N,L`: points per axis and box half-width.
#[derive(Debug, Clone, Copy)]
struct GridArg {
    points: usize,
    half_width: f64,
}

fn parse_grid(s: &str) -> std::result::Result<GridArg, String> {
    let (n, l) = s
        .split_once(',')
        .ok_or_else(|| format!("expected N,L, got `{s}`"))?;
    Ok(GridArg {
        points: n.trim().parse().map_err(|e| format!("N: {e}"))?,
        half_width: l.trim().parse().map_err(|e| format!("L: {e}"))?,
    })
}

#[derive(Args)]
struct LemmaCmd {
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "R-list", visible_alias = "r-list", value_delimiter = ',', num_args = 1.., default_values_t = [4.0, 8.0, 16.0, 32.0, 64.0])]
    r_list: Vec<f64>,
    #[arg(long, value_parser = parse_grid, default_value = "2048,32")]
    grid: GridArg,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyCmd {
    /// CSV with columns `x,value` or `x,y,value` in lattice order.
    #[arg(long)]
    input: PathBuf,
    /// Destination CSV; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value = "spectral")]
    method: String,
    /// Evaluate only at these points (coordinates flattened, `dim` per point).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    probe: Vec<f64>,
}

#[derive(Args)]
struct SolveCmd {
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_parser = parse_grid, default_value = "4096,64")]
    grid: GridArg,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long)]
    t_max: f64,
    /// Profile spec, e.g. `bump:radius=2` or `signed_u0:u0_scale=0.5`.
    #[arg(long, default_value = "bump")]
    data: String,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    /// Store every k-th step.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Drop the nonlinear substep.
    #[arg(long)]
    linear: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CertifyCmd {
    /// Directory written by `solve`.
    #[arg(long)]
    traj: PathBuf,
    #[arg(long = "R-list", visible_alias = "r-list", value_delimiter = ',', num_args = 1.., required = true)]
    r_list: Vec<f64>,
    #[arg(long = "K-list", visible_alias = "k-list", value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    k_list: Vec<f64>,
    /// Defaults to the run's exponent.
    #[arg(long)]
    p: Option<f64>,
    /// Defaults to the run's damping order.
    #[arg(long)]
    sigma: Option<f64>,
    /// Output directory; defaults to the trajectory directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepCmd {
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    sigma_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    p_list: Vec<f64>,
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [1.0])]
    amplitude_list: Vec<f64>,
    #[arg(long)]
    reference_amplitude: Option<f64>,
    #[arg(long, default_value = "bump")]
    data: String,
    /// Allow data with non-positive mean of u_1.
    #[arg(long)]
    any_mass: bool,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, value_parser = parse_grid, default_value = "4096,64")]
    grid: GridArg,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long)]
    t_max: f64,
    #[arg(long, default_value_t = 1e8)]
    blowup_threshold: f64,
    #[arg(long, default_value_t = 1e-3)]
    decay_epsilon: f64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("fwlab: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::VerifyLemmas(cmd) => verify_lemmas(cmd, &file),
        Command::ApplyOp(cmd) => apply_op(cmd, &file),
        Command::Solve(cmd) => solve(cmd, &file),
        Command::Certify(cmd) => certify_cmd(cmd, &file),
        Command::Sweep(cmd) => sweep(cmd, &file),
    }
}

fn overlay_grid(n: &mut usize, grid: &mut GridArg, file: &FileConfig) {
    if let Some(g) = &file.grid {
        overlay(n, &g.dim);
        overlay(&mut grid.points, &g.points);
        overlay(&mut grid.half_width, &g.half_width);
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn verify_lemmas(mut cmd: LemmaCmd, file: &FileConfig) -> Result<bool> {
    overlay_grid(&mut cmd.n, &mut cmd.grid, file);
    if let Some(l) = &file.lemmas {
        overlay(&mut cmd.n, &l.n);
        overlay(&mut cmd.sigma, &l.sigma);
        overlay(&mut cmd.p, &l.p);
        overlay(&mut cmd.r_list, &l.r_list);
        overlay(&mut cmd.grid.points, &l.points);
        overlay(&mut cmd.grid.half_width, &l.half_width);
        if let Some(out) = &l.out {
            cmd.out = Some(out.into());
        }
    }
    let args = LemmaArgs {
        n: cmd.n,
        sigma: cmd.sigma,
        p: cmd.p,
        r_list: cmd.r_list,
        points: cmd.grid.points,
        half_width: cmd.grid.half_width,
    };
    let checks = run_lemma_checks(&args)?;
    let pass = checks.iter().all(|c| c.pass);
    match &cmd.out {
        Some(path) => write_json(path, &checks)?,
        None => println!("{}", serde_json::to_string_pretty(&checks)?),
    }
    for c in checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} {}", c.lemma, c.parameters);
    }
    Ok(pass)
}

fn apply_op(mut cmd: ApplyCmd, file: &FileConfig) -> Result<bool> {
    if let Some(o) = &file.operator {
        overlay(&mut cmd.method, &o.method);
        overlay(&mut cmd.sigma, &o.sigma);
        overlay(&mut cmd.probe, &o.probes);
        if let Some(i) = &o.input {
            cmd.input = i.into();
        }
        if let Some(out) = &o.output {
            cmd.output = Some(out.into());
        }
    }
    let field = read_field_csv(&cmd.input)?;
    let registry = OperatorRegistry::default();
    let method = registry.get(&cmd.method)?;
    let dim = field.spec().dim();
    let text = if cmd.probe.is_empty() {
        field_csv(&method.on_grid(Operand::field(&field), cmd.sigma)?)
    } else {
        if !cmd.probe.len().is_multiple_of(dim) {
            bail!("{} probe coordinates do not split into points of dimension {dim}", cmd.probe.len());
        }
        let probes: Vec<Vec<f64>> = cmd.probe.chunks(dim).map(<[f64]>::to_vec).collect();
        let values = method.at_points(Operand::field(&field), cmd.sigma, &probes)?;
        let mut out = String::from(if dim == 1 { "x,value\n" } else { "x,y,value\n" });
        for (x, v) in probes.iter().zip(values) {
            let coords: Vec<String> = x.iter().map(f64::to_string).collect();
            out.push_str(&format!("{},{v}\n", coords.join(",")));
        }
        out
    };
    match &cmd.output {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(true)
}

fn solve(mut cmd: SolveCmd, file: &FileConfig) -> Result<bool> {
    overlay_grid(&mut cmd.n, &mut cmd.grid, file);
    if let Some(s) = &file.solver {
        overlay(&mut cmd.mu, &s.mu);
        overlay(&mut cmd.sigma, &s.sigma);
        overlay(&mut cmd.p, &s.p);
        overlay(&mut cmd.dt, &s.dt);
        overlay(&mut cmd.t_max, &s.t_max);
        overlay(&mut cmd.stride, &s.store_stride);
        overlay(&mut cmd.linear, &s.linear);
        if let Some(out) = &s.out {
            cmd.out = out.into();
        }
    }
    if let Some(d) = &file.data {
        overlay(&mut cmd.data, &d.profile);
        overlay(&mut cmd.amplitude, &d.amplitude);
    }
    let grid = GridSpec::new(cmd.n, cmd.grid.half_width, cmd.grid.points)?;
    let mut cfg = SimConfig::new(grid, cmd.mu, cmd.sigma, cmd.p, cmd.dt, cmd.t_max)?;
    cfg.store_stride = cmd.stride;
    cfg.nonlinear = !cmd.linear;
    if let Some(s) = &file.solver {
        overlay(&mut cfg.blowup_threshold, &s.blowup_threshold);
        overlay(&mut cfg.decay_epsilon, &s.decay_epsilon);
    }
    cfg.validate()?;
    let spec = ProfileSpec::parse(&cmd.data)?;
    let profile = ProfileRegistry::default().build(&spec)?;
    let (u0, u1) = profile.initial_data(grid, cmd.amplitude)?;
    let data = json!({
        "profile": spec,
        "amplitude": cmd.amplitude,
        "u1_mass": u1.integrate(),
        "u0_mass": u0.integrate(),
    });
    let traj = run(&cfg, u0, u1)?;
    write_solve(&traj, &data, &cmd.out)?;
    println!(
        "{} t*={} steps={} flags={}",
        traj.verdict.label(),
        traj.verdict.t_star().map_or("-".to_string(), |t| t.to_string()),
        traj.diagnostics.steps,
        traj.diagnostics.flags().join(";")
    );
    Ok(true)
}

fn certify_cmd(mut cmd: CertifyCmd, file: &FileConfig) -> Result<bool> {
    if let Some(c) = &file.certify {
        if let Some(t) = &c.traj {
            cmd.traj = t.into();
        }
        overlay(&mut cmd.r_list, &c.r_list);
        overlay(&mut cmd.k_list, &c.k_list);
        if c.p.is_some() {
            cmd.p = c.p;
        }
        if c.sigma.is_some() {
            cmd.sigma = c.sigma;
        }
        if let Some(out) = &c.out {
            cmd.out = Some(out.into());
        }
    }
    let traj = read_trajectory(&cmd.traj)?;
    let n = traj.grid().dim();
    let sigma = cmd.sigma.unwrap_or(traj.config.sigma);
    let p = cmd.p.unwrap_or(traj.config.p);
    let (u0, u1) = (&traj.u[0], &traj.v[0]);
    let out = cmd.out.clone().unwrap_or_else(|| cmd.traj.clone());
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    let mut reports: Vec<CertReport> = Vec::new();
    for &k in &cmd.k_list {
        for &r in &cmd.r_list {
            let fam = TestFamily::new(n, sigma, p, r, k)?;
            reports.push(certify(&traj, &fam, u0, u1)?);
        }
    }
    let mut pass = reports
        .iter()
        .all(|r| r.certified && r.identity_residual < IDENTITY_TOLERANCE);

    let base = TestFamily::new(n, sigma, p, cmd.r_list[0], cmd.k_list[0])?;
    let critical = 1.0 + sigma_bar(sigma) / n as f64;
    let chain = if cmd.r_list.len() >= 2 && p < critical {
        let c = rate_chain(&traj, &base, &cmd.r_list, u0, u1)?;
        pass &= c.slope_ok && c.majorants_hold && c.bounds_hold;
        Some(c)
    } else {
        None
    };
    let case2 = if (p - critical).abs() < 1e-12 && cmd.k_list.len() >= 3 {
        let r = cmd.r_list.iter().copied().fold(f64::MIN, f64::max);
        let c = check_case2_k(&traj, &base.with_r(r)?, &cmd.k_list, r)?;
        pass &= c.decays;
        Some(c)
    } else {
        None
    };

    let mut csv = String::from("R,K,I_R,I_Rt,I_Rx,J1,J2,J3,identity_residual,max_tail_bound,bound\n");
    for rep in &reports {
        let bound = chain
            .as_ref()
            .filter(|_| rep.k == base.k)
            .and_then(|c| c.rows.iter().find(|row| row.r == rep.r))
            .map(|row| row.bound.to_string())
            .unwrap_or_default();
        let tail = rep.tail_bounds.values().copied().fold(0.0, f64::max);
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            rep.r, rep.k, rep.i_r, rep.i_rt, rep.i_rx, rep.j1, rep.j2, rep.j3, rep.identity_residual, tail, bound
        ));
    }
    let csv_path = out.join("certify.csv");
    fs::write(&csv_path, csv).with_context(|| format!("writing {}", csv_path.display()))?;
    write_json(
        &out.join("certify.json"),
        &json!({
            "n": n,
            "sigma": sigma,
            "p": p,
            "reports": reports,
            "rate_chain": chain,
            "case2": case2,
            "pass": pass,
        }),
    )?;
    println!("certify: {}", if pass { "pass" } else { "fail" });
    Ok(pass)
}

fn sweep(mut cmd: SweepCmd, file: &FileConfig) -> Result<bool> {
    overlay_grid(&mut cmd.n, &mut cmd.grid, file);
    if let Some(s) = &file.solver {
        overlay(&mut cmd.mu, &s.mu);
        overlay(&mut cmd.dt, &s.dt);
        overlay(&mut cmd.t_max, &s.t_max);
        overlay(&mut cmd.blowup_threshold, &s.blowup_threshold);
        overlay(&mut cmd.decay_epsilon, &s.decay_epsilon);
    }
    if let Some(d) = &file.data {
        overlay(&mut cmd.data, &d.profile);
    }
    let mut theorem_regime = !cmd.any_mass;
    if let Some(s) = &file.sweep {
        overlay(&mut cmd.sigma_list, &s.sigma_list);
        overlay(&mut cmd.p_list, &s.p_list);
        overlay(&mut cmd.amplitude_list, &s.amplitude_list);
        if s.reference_amplitude.is_some() {
            cmd.reference_amplitude = s.reference_amplitude;
        }
        overlay(&mut cmd.workers, &s.workers);
        overlay(&mut theorem_regime, &s.theorem_regime);
        if let Some(out) = &s.out {
            cmd.out = out.into();
        }
    }
    let plan = SweepPlan {
        sigma_list: cmd.sigma_list,
        p_list: cmd.p_list,
        amplitude_list: cmd.amplitude_list,
        reference_amplitude: cmd.reference_amplitude,
        profile: ProfileSpec::parse(&cmd.data)?,
        theorem_regime,
        grid: GridSpec::new(cmd.n, cmd.grid.half_width, cmd.grid.points)?,
        mu: cmd.mu,
        dt: cmd.dt,
        t_max: cmd.t_max,
        blowup_threshold: cmd.blowup_threshold,
        decay_epsilon: cmd.decay_epsilon,
        workers: cmd.workers,
    };
    let result = run_sweep(&plan)?;
    emit(&result, &cmd.out)?;
    for &s in &plan.sigma_list {
        match estimate_pc(&result, s) {
            Ok(e) => match e.bracket {
                Some((lo, hi)) => println!("sigma={s}: p_c in [{lo}, {hi}] (formula {})", e.formula),
                None => println!("sigma={s}: bracket withheld ({})", e.anomaly.unwrap_or_default()),
            },
            Err(e) => println!("sigma={s}: bracket withheld ({e})"),
        }
    }
    let failed: Vec<_> = result.cells.iter().filter(|c| c.error.is_some()).collect();
    for c in &failed {
        eprintln!(
            "cell sigma={} p={} amplitude={} failed: {}",
            c.sigma,
            c.p,
            c.amplitude,
            c.error.as_deref().unwrap_or_default()
        );
    }
    Ok(failed.is_empty())
}
