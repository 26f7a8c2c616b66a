use serde::Serialize;

use super::sweep::{Cell, SweepResult};
use crate::error::{Error, Result};
use crate::evolve::Verdict;
use crate::fit::fit_power_law;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PcEstimate {
    pub sigma: f64,
    pub reference_amplitude: f64,
    /// Adjacent decided `p` values across the verdict flip. Withheld on an
    /// anomaly.
    pub bracket: Option<(f64, f64)>,
    /// `1 + σ̄/n`.
    pub formula: f64,
    /// `p` values at the reference amplitude that were not decided.
    pub undecided: Vec<f64>,
    pub anomaly: Option<String>,
    pub caveat: Option<String>,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn column(result: &SweepResult, sigma: f64, amplitude: f64) -> Vec<&Cell> {
    let mut cells: Vec<&Cell> = result
        .cells
        .iter()
        .filter(|c| same(c.sigma, sigma) && same(c.amplitude, amplitude))
        .collect();
    cells.sort_by(|a, b| a.p.total_cmp(&b.p));
    cells
}

/// Brackets the critical exponent at the reference amplitude. Cells that end
/// inconclusive are skipped: the bracket joins the largest blow-up `p` and
/// the smallest decaying `p`, which are adjacent among decided cells.
pub fn estimate_pc(result: &SweepResult, sigma: f64) -> Result<PcEstimate> {
    let amp = result.plan.reference();
    let cells = column(result, sigma, amp);
    let blow: Vec<f64> = cells
        .iter()
        .filter(|c| matches!(c.verdict, Some(Verdict::BlowUp { .. })))
        .map(|c| c.p)
        .collect();
    let decay: Vec<f64> = cells
        .iter()
        .filter(|c| matches!(c.verdict, Some(Verdict::GlobalDecay)))
        .map(|c| c.p)
        .collect();
    if blow.is_empty() || decay.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "σ = {sigma}: need at least one blow-up and one decay verdict at amplitude {amp} \
             (have {} and {})",
            blow.len(),
            decay.len()
        )));
    }
    let low = blow.iter().copied().fold(f64::MIN, f64::max);
    let high = decay.iter().copied().fold(f64::MAX, f64::min);
    let undecided = cells
        .iter()
        .filter(|c| !matches!(c.verdict, Some(Verdict::BlowUp { .. }) | Some(Verdict::GlobalDecay)))
        .map(|c| c.p)
        .collect();
    let n = result.plan.grid.dim() as f64;
    let (bracket, anomaly) = if low < high {
        (Some((low, high)), None)
    } else {
        (
            None,
            Some(format!("blow-up at p = {low} above decay at p = {high}")),
        )
    };
    Ok(PcEstimate {
        sigma,
        reference_amplitude: amp,
        bracket,
        formula: 1.0 + sigma.min(1.0) / n,
        undecided,
        anomaly,
        caveat: (sigma > 1.0).then(|| {
            "for σ in (1, 2] sharpness of 1 + 1/n is open; the bracket is descriptive".to_string()
        }),
    })
}

/// Anomalies across all amplitudes: a decaying cell below a blow-up cell in
/// `p` at fixed `(σ, amplitude)`.
pub fn monotonicity_anomalies(result: &SweepResult) -> Vec<String> {
    let mut out = Vec::new();
    for &s in &result.plan.sigma_list {
        for &a in &result.plan.amplitude_list {
            let cells = column(result, s, a);
            for (i, lo) in cells.iter().enumerate() {
                if !matches!(lo.verdict, Some(Verdict::GlobalDecay)) {
                    continue;
                }
                if let Some(hi) = cells[i + 1..]
                    .iter()
                    .find(|c| matches!(c.verdict, Some(Verdict::BlowUp { .. })))
                {
                    out.push(format!(
                        "σ = {s}, amplitude = {a}: decay at p = {} but blow-up at p = {}",
                        lo.p, hi.p
                    ));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LifespanTrend {
    pub sigma: f64,
    pub p: f64,
    pub amplitudes: Vec<f64>,
    pub t_stars: Vec<f64>,
    /// `t*` non-increasing in amplitude.
    pub monotone: bool,
    pub slope: f64,
}

/// Log-log slope of `t*` against amplitude over the blow-up cells.
pub fn lifespan_trend(result: &SweepResult, sigma: f64, p: f64) -> Result<LifespanTrend> {
    let mut pairs: Vec<(f64, f64)> = result
        .cells
        .iter()
        .filter(|c| same(c.sigma, sigma) && same(c.p, p))
        .filter_map(|c| c.t_star.map(|t| (c.amplitude, t)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.dedup_by(|a, b| same(a.0, b.0));
    if pairs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "lifespan trend withheld for σ = {sigma}, p = {p}: {} blow-up amplitudes, need 4",
            pairs.len()
        )));
    }
    let (amplitudes, t_stars): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let monotone = t_stars.windows(2).all(|w| w[1] <= w[0]);
    let fit = fit_power_law(&amplitudes, &t_stars)?;
    Ok(LifespanTrend {
        sigma,
        p,
        amplitudes,
        t_stars,
        monotone,
        slope: fit.slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::sweep::SweepPlan;
    use crate::harness::ProfileSpec;
    use crate::grid::GridSpec;

    fn plan() -> SweepPlan {
        SweepPlan {
            sigma_list: vec![1.0],
            p_list: vec![1.5, 2.0, 3.0, 4.0],
            amplitude_list: vec![1.0, 2.0, 4.0, 8.0],
            reference_amplitude: None,
            profile: ProfileSpec::default(),
            theorem_regime: true,
            grid: GridSpec::new(1, 64.0, 64).unwrap(),
            mu: 1.0,
            dt: 0.1,
            t_max: 10.0,
            blowup_threshold: 1e8,
            decay_epsilon: 1e-3,
            workers: 1,
        }
    }

    fn cell(p: f64, amplitude: f64, verdict: Verdict) -> Cell {
        Cell {
            sigma: 1.0,
            p,
            amplitude,
            verdict: Some(verdict),
            t_star: verdict.t_star(),
            lifespan: verdict.t_star(),
            mass: 1.0,
            diagnostics: None,
            flags: vec![],
            error: None,
        }
    }

    fn result(cells: Vec<Cell>) -> SweepResult {
        SweepResult { plan: plan(), cells }
    }

    #[test]
    fn bracket_skips_inconclusive() {
        let r = result(vec![
            cell(1.5, 1.0, Verdict::BlowUp { t_star: 5.0 }),
            cell(2.0, 1.0, Verdict::BlowUp { t_star: 9.0 }),
            cell(3.0, 1.0, Verdict::Inconclusive),
            cell(4.0, 1.0, Verdict::GlobalDecay),
        ]);
        let est = estimate_pc(&r, 1.0).unwrap();
        assert_eq!(est.bracket, Some((2.0, 4.0)));
        assert_eq!(est.undecided, vec![3.0]);
        assert_eq!(est.formula, 2.0);
    }

    #[test]
    fn inversion_is_an_anomaly() {
        let r = result(vec![
            cell(1.5, 1.0, Verdict::GlobalDecay),
            cell(2.0, 1.0, Verdict::BlowUp { t_star: 9.0 }),
        ]);
        let est = estimate_pc(&r, 1.0).unwrap();
        assert!(est.bracket.is_none() && est.anomaly.is_some());
        assert_eq!(monotonicity_anomalies(&r).len(), 1);
    }

    #[test]
    fn one_sided_column_is_rejected() {
        let r = result(vec![cell(1.5, 1.0, Verdict::BlowUp { t_star: 5.0 })]);
        assert!(estimate_pc(&r, 1.0).is_err());
    }

    #[test]
    fn trend_dedups_and_fits() {
        let r = result(vec![
            cell(1.5, 1.0, Verdict::BlowUp { t_star: 8.0 }),
            cell(1.5, 2.0, Verdict::BlowUp { t_star: 4.0 }),
            cell(1.5, 2.0, Verdict::BlowUp { t_star: 4.0 }),
            cell(1.5, 4.0, Verdict::BlowUp { t_star: 2.0 }),
            cell(1.5, 8.0, Verdict::BlowUp { t_star: 1.0 }),
        ]);
        let t = lifespan_trend(&r, 1.0, 1.5).unwrap();
        assert_eq!(t.amplitudes, vec![1.0, 2.0, 4.0, 8.0]);
        assert!(t.monotone);
        assert!((t.slope + 1.0).abs() < 1e-12);
    }

    #[test]
    fn trend_withheld_without_blowups() {
        let r = result(vec![
            cell(3.0, 1.0, Verdict::GlobalDecay),
            cell(3.0, 2.0, Verdict::GlobalDecay),
        ]);
        assert!(lifespan_trend(&r, 1.0, 3.0).is_err());
    }
}
