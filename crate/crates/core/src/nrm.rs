//! Normalized-random-measure weights built from exponentially decaying jumps.
//!
//! Jumps `(τ_j, J_j)` arrive as a Poisson process with intensity
//! `decay · w(J)`; at time `t` the weight of jump `j` is its decayed size
//! `1(τ_j ≤ t) e^{−decay(t−τ_j)} J_j` divided by the total over all jumps.
//!
//! Only the gamma-process Lévy density `w(J) = M J^{-1} e^{-J}` is provided.
//! Jumps below a floor `ε` are discarded: per unit of time that drops
//! `decay · M(1 − e^{−ε}) ≤ decay · M ε` of expected unnormalized mass.
//! The infinite past is replaced by a lookback `L = ln(1/tol_rel)/decay`
//! before the requested window; mass born earlier than that has decayed by
//! at least the factor `tol_rel`.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::rng::RandomStream;
use crate::scalar::{compensated_sum, Scalar};
use crate::special::{exp_integral_e1, exp_integral_e1_inverse};
use crate::stats::OverlapEstimate;
use crate::weights::WeightVector;

/// Replicates with no active jump are redrawn at most this many times each.
const MAX_RESAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[non_exhaustive]
pub enum LevySpec {
    /// `w(J) = mass · J^{-1} e^{-J}` restricted to `J > floor`.
    Gamma { mass: f64, floor: f64 },
}

impl LevySpec {
    pub fn gamma(mass: f64, floor: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("floor", floor)?;
        Ok(LevySpec::Gamma { mass, floor })
    }

    /// `∫_ε^∞ w(J) dJ = M E₁(ε)`.
    pub fn tail_integral(&self) -> f64 {
        match *self {
            LevySpec::Gamma { mass, floor } => mass * exp_integral_e1(floor),
        }
    }

    /// `∫_0^ε J w(J) dJ = M(1 − e^{−ε})`, the discarded mass density.
    pub fn discarded_mass_rate(&self) -> f64 {
        match *self {
            LevySpec::Gamma { mass, floor } => -mass * (-floor).exp_m1(),
        }
    }

    /// `∫_0^∞ J w(J) dJ`.
    pub fn total_mass_rate(&self) -> f64 {
        match *self {
            LevySpec::Gamma { mass, .. } => mass,
        }
    }

    /// A jump size from `w` restricted to `(ε, ∞)`, by inverting `E₁`.
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            LevySpec::Gamma { floor, .. } => {
                // survival S(J) = E1(J)/E1(ε); solve S(J) = u with u in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                let target = u * exp_integral_e1(floor);
                exp_integral_e1_inverse(target)
                    .expect("positive target")
                    .max(floor)
            }
        }
    }
}

impl Default for LevySpec {
    fn default() -> Self {
        LevySpec::Gamma {
            mass: 1.0,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrmParams {
    pub decay: f64,
    pub levy: LevySpec,
    /// Relative size of pre-lookback mass tolerated; `1` disables the lookback.
    pub tol_rel: f64,
}

impl NrmParams {
    pub const DEFAULT_TOL_REL: f64 = 1e-10;

    pub fn new(decay: f64, levy: LevySpec) -> Result<Self> {
        require_positive("decay", decay)?;
        Ok(Self {
            decay,
            levy,
            tol_rel: Self::DEFAULT_TOL_REL,
        })
    }

    pub fn with_tolerance(mut self, tol_rel: f64) -> Result<Self> {
        if !(tol_rel > 0.0 && tol_rel <= 1.0) {
            return Err(invalid(
                "tol_rel",
                format!("must lie in (0,1], got {tol_rel}"),
            ));
        }
        self.tol_rel = tol_rel;
        Ok(self)
    }

    pub fn lookback(&self) -> f64 {
        (1.0 / self.tol_rel).ln() / self.decay
    }

    /// Expected number of jumps above the floor born over `length` time units.
    pub fn expected_jumps(&self, length: f64) -> f64 {
        self.decay * length * self.levy.tail_integral()
    }
}

impl Default for NrmParams {
    fn default() -> Self {
        Self {
            decay: 1.0,
            levy: LevySpec::default(),
            tol_rel: Self::DEFAULT_TOL_REL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub tau: f64,
    pub size: f64,
}

/// Jumps sorted by birth time, complete above the floor over `window`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpSet {
    jumps: Vec<Jump>,
    window: (f64, f64),
}

impl JumpSet {
    pub fn new(mut jumps: Vec<Jump>, window: (f64, f64)) -> Result<Self> {
        if !(window.0 <= window.1) {
            return Err(invalid("window", format!("{window:?} is not ordered")));
        }
        if let Some(j) = jumps.iter().find(|j| !(j.size > 0.0 && j.size.is_finite())) {
            return Err(invalid(
                "size",
                format!("jump sizes must be positive, got {}", j.size),
            ));
        }
        if let Some(j) = jumps.iter().find(|j| j.tau < window.0 || j.tau > window.1) {
            return Err(invalid(
                "tau",
                format!("birth time {} outside {window:?}", j.tau),
            ));
        }
        jumps.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        Ok(Self { jumps, window })
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    /// Number of jumps born at or before `t`.
    pub fn active_count(&self, t: f64) -> usize {
        self.jumps.partition_point(|j| j.tau <= t)
    }

    /// `Σ_l 1(τ_l ≤ t) e^{−decay(t−τ_l)} J_l`.
    pub fn total_mass(&self, t: f64, decay: f64) -> f64 {
        compensated_sum(unnormalized_masses(self, t, decay))
    }
}

/// Jumps over `window` extended backward by the lookback.
///
/// A zero-length window gives an empty set.
pub fn simulate_jumps<R: Rng + ?Sized>(
    params: &NrmParams,
    window: (f64, f64),
    rng: &mut R,
) -> Result<JumpSet> {
    let (t_min, t_max) = window;
    if !(t_min.is_finite() && t_max.is_finite() && t_min <= t_max) {
        return Err(invalid(
            "window",
            format!("need finite t_min <= t_max, got {window:?}"),
        ));
    }
    if t_min == t_max {
        return JumpSet::new(Vec::new(), window);
    }
    let lo = t_min - params.lookback();
    let expected = params.expected_jumps(t_max - lo);
    let count = Poisson::new(expected)
        .map_err(|e| invalid("decay", e.to_string()))?
        .sample(rng) as usize;
    let span = t_max - lo;
    let jumps = (0..count)
        .map(|_| {
            let tau = lo + span * rng.random::<f64>();
            let size = params.levy.sample_size(rng);
            Jump { tau, size }
        })
        .collect();
    JumpSet::new(jumps, (lo, t_max))
}

/// `e^{−decay(t−τ_j)} J_j` for each active jump, in birth order.
pub fn unnormalized_masses(jumps: &JumpSet, t: f64, decay: f64) -> impl Iterator<Item = f64> + '_ {
    jumps.jumps[..jumps.active_count(t)]
        .iter()
        .map(move |j| j.size * (-decay * (t - j.tau)).exp())
}

/// Normalized weights of every active jump, in birth order.
///
/// Masses are taken relative to the latest active birth, so `t` cancels: the
/// weights change only when a new jump becomes active.
fn aligned_weights(jumps: &JumpSet, t: f64, decay: f64) -> Result<Vec<f64>> {
    let (lo, hi) = jumps.window;
    if !(t >= lo && t <= hi) {
        return Err(invalid(
            "t",
            format!("time {t} outside jump window ({lo}, {hi})"),
        ));
    }
    let active = &jumps.jumps[..jumps.active_count(t)];
    let Some(latest) = active.last() else {
        return Err(Error::NoActiveJump { t });
    };
    let rel: Vec<f64> = active
        .iter()
        .map(|j| j.size * (decay * (j.tau - latest.tau)).exp())
        .collect();
    let total = compensated_sum(rel.iter().copied());
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::Data(format!("normalizing mass {total} at t = {t}")));
    }
    Ok(rel.into_iter().map(|u| u / total).collect())
}

/// Weights of the `K` heaviest jumps plus the normalized remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct NrmWeights<T> {
    pub weights: WeightVector<T>,
    /// Position in the jump set (birth order) of each materialized weight.
    pub labels: Vec<usize>,
}

pub fn nrm_weights<T: Scalar>(
    jumps: &JumpSet,
    t: f64,
    decay: f64,
    k: usize,
) -> Result<NrmWeights<T>> {
    require_positive("decay", decay)?;
    let w = aligned_weights(jumps, t, decay)?;
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|a, b| w[*b].total_cmp(&w[*a]).then(a.cmp(b)));
    let (head, rest) = order.split_at(k.min(order.len()));
    let tail = if rest.is_empty() {
        0.0
    } else {
        compensated_sum(rest.iter().map(|i| w[*i]))
    };
    let weights = head.iter().map(|i| T::of(w[*i])).collect();
    Ok(NrmWeights {
        weights: WeightVector::new(weights, T::of(tail))?,
        labels: head.to_vec(),
    })
}

/// `D(h)` between `t` and `t + h` over the common jump labeling.
pub fn nrm_overlap(jumps: &JumpSet, t: f64, h: f64, decay: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(invalid("h", format!("lag must be >= 0, got {h}")));
    }
    let now = aligned_weights(jumps, t, decay)?;
    let later = aligned_weights(jumps, t + h, decay)?;
    let d = compensated_sum(now.iter().zip(later.iter()).map(|(a, b)| a * b));
    Ok(d.min(1.0))
}

/// Per-run bookkeeping of the NRM Monte Carlo estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrmDiagnostics {
    /// Jump sets redrawn because nothing was active at `t`.
    pub resampled: usize,
    pub mean_jumps: f64,
    pub mean_active: f64,
    /// Smallest normalizing denominator seen at `t`.
    pub min_total_mass: f64,
    /// Largest `|Σw − 1|` over replicates, weights at `t` and every `t + h`.
    pub max_normalization_error: f64,
    pub lookback: f64,
    /// Expected unnormalized mass dropped below the floor over the simulated window.
    pub floor_mass_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrmOverlapCurve {
    pub estimates: Vec<OverlapEstimate>,
    pub diagnostics: NrmDiagnostics,
}

struct Replicate {
    overlaps: Vec<f64>,
    resampled: usize,
    jumps: usize,
    active: usize,
    total_mass: f64,
    norm_error: f64,
}

/// Monte Carlo `E{D(h)}` at each lag, evaluating every lag on the same jump set.
///
/// `generate` produces the jump set of one replicate from its stream; sets with
/// no active jump at `t` are redrawn and counted.
pub fn estimate_overlap_with<F>(
    t: f64,
    hs: &[f64],
    decay: f64,
    n_reps: usize,
    rng: &RandomStream,
    generate: F,
) -> Result<(Vec<OverlapEstimate>, NrmDiagnostics)>
where
    F: Fn(&mut RandomStream) -> Result<JumpSet> + Sync,
{
    if n_reps == 0 {
        return Err(invalid("n_reps", "need at least one replicate"));
    }
    if let Some(h) = hs.iter().find(|h| !(**h >= 0.0)) {
        return Err(invalid("h", format!("lag must be >= 0, got {h}")));
    }
    let reps: Vec<Replicate> = (0..n_reps as u64)
        .into_par_iter()
        .map(|i| {
            let mut stream = rng.replicate(i);
            let mut resampled = 0;
            let jumps = loop {
                let js = generate(&mut stream)?;
                if js.active_count(t) > 0 {
                    break js;
                }
                resampled += 1;
                if resampled > MAX_RESAMPLES {
                    return Err(Error::NoActiveJump { t });
                }
            };
            let mut norm_error: f64 = 0.0;
            for s in std::iter::once(t).chain(hs.iter().map(|h| t + h)) {
                let w = aligned_weights(&jumps, s, decay)?;
                norm_error = norm_error.max((compensated_sum(w.iter().copied()) - 1.0).abs());
            }
            let overlaps = hs
                .iter()
                .map(|h| nrm_overlap(&jumps, t, *h, decay))
                .collect::<Result<Vec<_>>>()?;
            Ok(Replicate {
                overlaps,
                resampled,
                jumps: jumps.len(),
                active: jumps.active_count(t),
                total_mass: jumps.total_mass(t, decay),
                norm_error,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let estimates = hs
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let xs: Vec<f64> = reps.iter().map(|r| r.overlaps[k]).collect();
            OverlapEstimate::from_samples(*h, &xs)
        })
        .collect();
    let n = reps.len() as f64;
    let diagnostics = NrmDiagnostics {
        resampled: reps.iter().map(|r| r.resampled).sum(),
        mean_jumps: reps.iter().map(|r| r.jumps as f64).sum::<f64>() / n,
        mean_active: reps.iter().map(|r| r.active as f64).sum::<f64>() / n,
        min_total_mass: reps
            .iter()
            .map(|r| r.total_mass)
            .fold(f64::INFINITY, f64::min),
        max_normalization_error: reps.iter().map(|r| r.norm_error).fold(0.0, f64::max),
        lookback: 0.0,
        floor_mass_bound: 0.0,
    };
    Ok((estimates, diagnostics))
}

/// `E{D(h)}` for several lags on shared jump sets over `(0, t + max h)`.
pub fn estimate_overlap_curve_nrm(
    params: &NrmParams,
    t: f64,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<NrmOverlapCurve> {
    if n_reps < 100 {
        return Err(invalid(
            "n_reps",
            format!("need at least 100 replicates, got {n_reps}"),
        ));
    }
    estimate_overlap_curve_nrm_unchecked(params, t, hs, n_reps, rng)
}

pub(crate) fn estimate_overlap_curve_nrm_unchecked(
    params: &NrmParams,
    t: f64,
    hs: &[f64],
    n_reps: usize,
    rng: &RandomStream,
) -> Result<NrmOverlapCurve> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("need t > 0, got {t}")));
    }
    let h_max = hs.iter().copied().fold(0.0, f64::max);
    let window = (0.0, t + h_max);
    let (estimates, mut diagnostics) =
        estimate_overlap_with(t, hs, params.decay, n_reps, rng, |s| {
            simulate_jumps(params, window, s)
        })?;
    diagnostics.lookback = params.lookback();
    diagnostics.floor_mass_bound = params.decay
        * (window.1 - window.0 + params.lookback())
        * params.levy.discarded_mass_rate();
    Ok(NrmOverlapCurve {
        estimates,
        diagnostics,
    })
}

/// `E{D(h)}` at one lag.
pub fn estimate_expected_overlap_nrm(
    params: &NrmParams,
    t: f64,
    h: f64,
    n_reps: usize,
    rng: &RandomStream,
) -> Result<(OverlapEstimate, NrmDiagnostics)> {
    let curve = estimate_overlap_curve_nrm(params, t, &[h], n_reps, rng)?;
    Ok((curve.estimates[0], curve.diagnostics))
}
