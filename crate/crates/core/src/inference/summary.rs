use serde::{Deserialize, Serialize};

use super::sampler::{Acceptance, PosteriorDraws};
use crate::error::{Error, Result};
use crate::stats::{mean_sd, quantile_sorted};

/// Mean, standard deviation and central 90% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantitySummary {
    pub mean: f64,
    pub sd: f64,
    pub median: f64,
    pub q05: f64,
    pub q95: f64,
}

impl QuantitySummary {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let (mean, sd) = mean_sd(values);
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            mean,
            sd,
            median: quantile_sorted(&sorted, 0.5),
            q05: quantile_sorted(&sorted, 0.05),
            q95: quantile_sorted(&sorted, 0.95),
        })
    }
}

/// Posterior probability of at least one change point in `(start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbability {
    pub start: f64,
    pub end: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub n_draws: usize,
    pub lambda: QuantitySummary,
    pub count: QuantitySummary,
    /// `(k, P(k change points))`, ascending in `k`.
    pub count_distribution: Vec<(usize, f64)>,
    pub count_mode: usize,
    /// Pooled locations of all sampled change points.
    pub taus: Option<QuantitySummary>,
    pub log_posterior: QuantitySummary,
    pub change_probability: Vec<CellProbability>,
    pub acceptance: Acceptance,
}

/// Summaries over the retained draws of one or more chains.
///
/// `grid` must be increasing; each consecutive pair defines one cell.
pub fn posterior_summary(chains: &[PosteriorDraws], grid: &[f64]) -> Result<PosteriorSummary> {
    let draws: Vec<_> = chains.iter().flat_map(|c| c.draws.iter()).collect();
    if draws.is_empty() {
        return Err(Error::Empty("posterior draws"));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::NonIncreasingGrid { index: i + 1 });
    }
    let n = draws.len();
    let lambdas: Vec<f64> = draws.iter().map(|d| d.lambda).collect();
    let counts: Vec<f64> = draws.iter().map(|d| d.taus.len() as f64).collect();
    let lps: Vec<f64> = draws.iter().map(|d| d.log_posterior).collect();
    let taus: Vec<f64> = draws.iter().flat_map(|d| d.taus.iter().copied()).collect();

    let max_k = draws.iter().map(|d| d.taus.len()).max().unwrap_or(0);
    let mut hist = vec![0usize; max_k + 1];
    for d in &draws {
        hist[d.taus.len()] += 1;
    }
    let count_distribution: Vec<(usize, f64)> = hist
        .iter()
        .enumerate()
        .filter(|(_, c)| **c > 0)
        .map(|(k, c)| (k, *c as f64 / n as f64))
        .collect();
    let count_mode = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(k, _)| k)
        .unwrap_or(0);

    let change_probability = grid
        .windows(2)
        .map(|w| {
            let hits = draws
                .iter()
                .filter(|d| {
                    let i = d.taus.partition_point(|t| *t <= w[0]);
                    d.taus.get(i).is_some_and(|t| *t <= w[1])
                })
                .count();
            CellProbability {
                start: w[0],
                end: w[1],
                probability: hits as f64 / n as f64,
            }
        })
        .collect();

    let mut acceptance = Acceptance::default();
    for c in chains {
        for (dst, src) in [
            (&mut acceptance.shift, c.acceptance.shift),
            (&mut acceptance.birth, c.acceptance.birth),
            (&mut acceptance.death, c.acceptance.death),
        ] {
            dst.proposed += src.proposed;
            dst.accepted += src.accepted;
        }
    }

    Ok(PosteriorSummary {
        n_draws: n,
        lambda: QuantitySummary::from_values(&lambdas).expect("nonempty"),
        count: QuantitySummary::from_values(&counts).expect("nonempty"),
        count_distribution,
        count_mode,
        taus: QuantitySummary::from_values(&taus),
        log_posterior: QuantitySummary::from_values(&lps).expect("nonempty"),
        change_probability,
        acceptance,
    })
}
