//! The checks behind `verify-lemmas`: each produces a
//! `{lemma, parameters, measured, expected, pass}` record.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::testfn::{
    eta_condition_constant, psi_pointwise_ratio, verify_lemma_domination, verify_lemma_rate,
    verify_lemma_scaling, TestFamily,
};

/// Largest relative deviation accepted in the dilation identity.
pub const SCALING_TOLERANCE: f64 = 1e-6;
/// Slack on the fitted rate exponent.
pub const RATE_TOLERANCE: f64 = 0.05;
/// Largest relative change of `C_est` under `N -> 2N`.
pub const DOMINATION_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaArgs {
    pub n: usize,
    pub sigma: f64,
    pub p: f64,
    pub r_list: Vec<f64>,
    pub points: usize,
    pub half_width: f64,
}

impl Default for LemmaArgs {
    fn default() -> Self {
        Self {
            n: 1,
            sigma: 1.0,
            p: 2.0,
            r_list: vec![4.0, 8.0, 16.0, 32.0, 64.0],
            points: 2048,
            half_width: 32.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    pub parameters: Value,
    pub measured: Value,
    pub expected: Value,
    pub pass: bool,
}

pub fn run_lemma_checks(args: &LemmaArgs) -> Result<Vec<LemmaCheck>> {
    if !(args.sigma > 0.0 && args.sigma <= 2.0) || !(args.p > 1.0) || args.r_list.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "need sigma in (0, 2], p > 1 and a non-empty R list, got sigma = {}, p = {}, R = {:?}",
            args.sigma, args.p, args.r_list
        )));
    }
    let s = args.sigma / 2.0;
    let mut out = Vec::new();

    if s < 1.0 {
        let probes: Vec<Vec<f64>> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&r| {
                let mut x = vec![0.0; args.n];
                x[0] = r;
                x
            })
            .collect();
        for &r in &args.r_list {
            let rep = verify_lemma_scaling(s, r, &probes)?;
            out.push(LemmaCheck {
                lemma: "scaling",
                parameters: json!({ "n": args.n, "s": s, "R": r, "probes": probes }),
                measured: json!({ "max_deviation": rep.max_deviation, "dilated": rep.dilated, "rescaled": rep.rescaled }),
                expected: json!({ "max_deviation_below": SCALING_TOLERANCE }),
                pass: rep.max_deviation < SCALING_TOLERANCE,
            });
        }
    }

    if args.r_list.len() >= 2 {
        let rep = verify_lemma_rate(args.n, s, args.p, &args.r_list, (args.points, args.half_width))?;
        out.push(LemmaCheck {
            lemma: "rate",
            parameters: json!({ "n": args.n, "s": s, "p": args.p, "R": args.r_list, "grid": [args.points, args.half_width] }),
            measured: json!({ "slope": rep.fit.slope, "integrals": rep.integrals, "rms_residual": rep.fit.rms_residual }),
            expected: json!({ "slope": rep.expected_slope, "tolerance": RATE_TOLERANCE }),
            pass: (rep.fit.slope - rep.expected_slope).abs() <= RATE_TOLERANCE,
        });
    }

    let coarse = verify_lemma_domination(args.n, s, GridSpec::new(args.n, args.half_width, args.points)?)?;
    let fine = verify_lemma_domination(args.n, s, GridSpec::new(args.n, args.half_width, 2 * args.points)?)?;
    let drift = (fine.c_est - coarse.c_est).abs() / coarse.c_est;
    out.push(LemmaCheck {
        lemma: "domination",
        parameters: json!({ "n": args.n, "s": s, "grid": [args.points, args.half_width], "refined_points": 2 * args.points }),
        measured: json!({ "c_est": coarse.c_est, "c_est_refined": fine.c_est, "relative_change": drift, "argmax_radius": fine.argmax_radius, "spot_check": fine.spot_check }),
        expected: json!({ "finite": true, "relative_change_below": DOMINATION_TOLERANCE }),
        pass: coarse.c_est.is_finite() && fine.c_est.is_finite() && drift < DOMINATION_TOLERANCE,
    });

    let c_eta = eta_condition_constant(args.p, 100_000)?;
    out.push(LemmaCheck {
        lemma: "eta_condition",
        parameters: json!({ "p": args.p, "samples": 100_000 }),
        measured: json!({ "sup": c_eta }),
        expected: json!({ "finite": true }),
        pass: c_eta.is_finite(),
    });

    for &r in &args.r_list {
        let fam = TestFamily::new(args.n, args.sigma, args.p, r, 1.0)?;
        let ratio = psi_pointwise_ratio(&fam, 10_000);
        out.push(LemmaCheck {
            lemma: "psi_bound",
            parameters: json!({ "sigma": args.sigma, "p": args.p, "R": r, "samples": 10_000 }),
            measured: json!({ "max_ratio": ratio }),
            expected: json!({ "max_ratio_at_most": 1.0 }),
            pass: ratio <= 1.0,
        });
    }
    Ok(out)
}
