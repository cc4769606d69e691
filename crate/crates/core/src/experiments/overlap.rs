//! Monte Carlo `E{D(h)}` for each weight process.
//!
//! Replicate `i` draws from `rng.replicate(i)`. All lags of one call are
//! evaluated on the same replicate draws, and results are collected in
//! replicate order, so the output does not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::changepoint::{indicator_weights, overlap_exact, sample_partition, GapRate};
use crate::error::{invalid, Result};
use crate::geometric::{
    overlap_closed_form, stationary_sample, transition_sample, DiffusionParams,
};
use crate::nrm::{estimate_overlap_curve_nrm_unchecked, NrmDiagnostics, NrmParams};
use crate::rng::RandomStream;
use crate::stats::OverlapEstimate;
use crate::weights::overlap_statistic;

/// Minimum replicate count accepted by the public estimators.
pub const MIN_REPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Geometric(DiffusionParams),
    Nrm(NrmParams),
    Changepoint { rate: GapRate },
}

impl ModelSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            ModelSpec::Geometric(_) => "geometric",
            ModelSpec::Nrm(_) => "nrm",
            ModelSpec::Changepoint { .. } => "changepoint",
        }
    }

    /// Closed-form `E{D(h)}` where one is known.
    pub fn analytic_overlap(&self, h: f64) -> Option<f64> {
        match self {
            ModelSpec::Changepoint { rate } => Some((-rate.get() * h).exp()),
            ModelSpec::Geometric(p) if h == 0.0 => {
                Some(crate::geometric::stationary_overlap_limit(p))
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum CurveDiagnostics {
    /// Replicates where the generic overlap of indicator weights differed from the exact one.
    Changepoint {
        discrepancies: usize,
    },
    Geometric,
    Nrm(NrmDiagnostics),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub estimates: Vec<OverlapEstimate>,
    pub diagnostics: CurveDiagnostics,
}

fn check_lags(hs: &[f64]) -> Result<()> {
    if hs.is_empty() {
        return Err(invalid("h_grid", "need at least one lag"));
    }
    match hs.iter().find(|h| !(h.is_finite() && **h >= 0.0)) {
        Some(h) => Err(invalid(
            "h",
            format!("lags must be finite and >= 0, got {h}"),
        )),
        None => Ok(()),
    }
}

fn summarize(hs: &[f64], per_rep: &[Vec<f64>]) -> Vec<OverlapEstimate> {
    hs.iter()
        .enumerate()
        .map(|(k, h)| {
            let xs: Vec<f64> = per_rep.iter().map(|r| r[k]).collect();
            OverlapEstimate::from_samples(*h, &xs)
        })
        .collect()
}

fn changepoint_curve(
    rate: GapRate,
    t: f64,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<OverlapCurve> {
    let h_max = hs.iter().copied().fold(0.0, f64::max);
    let reps: Vec<(Vec<f64>, usize)> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.replicate(i);
            let p = sample_partition(rate, t + h_max, &mut stream)?;
            let k = p.locate(t + h_max)?.get() as usize;
            let now = indicator_weights::<f64>(&p, t, k)?;
            let mut mismatches = 0;
            let mut out = Vec::with_capacity(hs.len());
            for h in hs {
                let exact = f64::from(overlap_exact(&p, t, *h)?);
                let later = indicator_weights::<f64>(&p, t + h, k)?;
                let generic = overlap_statistic(&now.weights, &later.weights)?;
                if generic.value != exact || !generic.is_exact() {
                    mismatches += 1;
                }
                out.push(exact);
            }
            Ok((out, mismatches))
        })
        .collect::<Result<Vec<_>>>()?;
    let overlaps: Vec<Vec<f64>> = reps.iter().map(|r| r.0.clone()).collect();
    Ok(OverlapCurve {
        estimates: summarize(hs, &overlaps),
        diagnostics: CurveDiagnostics::Changepoint {
            discrepancies: reps.iter().map(|r| r.1).sum(),
        },
    })
}

fn geometric_curve(
    params: &DiffusionParams,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<OverlapCurve> {
    let reps: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.replicate(i);
            let start = stationary_sample(params, &mut stream);
            hs.iter()
                .map(|h| {
                    let later = if *h == 0.0 {
                        start.lambda
                    } else {
                        transition_sample(params, &start, *h, &mut stream)?.lambda
                    };
                    overlap_closed_form(start.lambda, later)
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapCurve {
        estimates: summarize(hs, &reps),
        diagnostics: CurveDiagnostics::Geometric,
    })
}

/// `E{D(h)}` at every lag in `hs`, sharing replicate draws across lags.
pub fn estimate_overlap_curve(
    model: &ModelSpec,
    t: f64,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<OverlapCurve> {
    if n_reps < MIN_REPS {
        return Err(invalid(
            "n_reps",
            format!("need at least {MIN_REPS} replicates, got {n_reps}"),
        ));
    }
    overlap_curve_unchecked(model, t, hs, n_reps, rng)
}

pub(crate) fn overlap_curve_unchecked(
    model: &ModelSpec,
    t: f64,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<OverlapCurve> {
    check_lags(hs)?;
    if n_reps == 0 {
        return Err(invalid("n_reps", "need at least one replicate"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("need finite t > 0, got {t}")));
    }
    match model {
        ModelSpec::Changepoint { rate } => changepoint_curve(*rate, t, hs, n_reps, rng),
        ModelSpec::Geometric(p) => geometric_curve(p, hs, n_reps, rng),
        ModelSpec::Nrm(p) => {
            let curve = estimate_overlap_curve_nrm_unchecked(p, t, hs, n_reps, rng)?;
            Ok(OverlapCurve {
                estimates: curve.estimates,
                diagnostics: CurveDiagnostics::Nrm(curve.diagnostics),
            })
        }
    }
}

/// `E{D(h)}` at a single lag.
pub fn estimate_expected_overlap(
    model: &ModelSpec,
    t: f64,
    h: f64,
    n_reps: usize,
    rng: &RandomStream,
) -> Result<OverlapEstimate> {
    estimate_overlap_curve(model, t, &[h], n_reps, rng).map(|c| c.estimates[0])
}
