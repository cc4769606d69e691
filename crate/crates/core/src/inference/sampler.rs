//! Metropolis-within-Gibbs over change points in the observed window.
//!
//! State: change points `0 < s_1 < … < s_k < T` with `T = t_n`, and the rate
//! `λ`. Inside the window the exponential-gap prior is a Poisson process, so
//! the ordered configuration has prior density `λ^k e^{−λT}`. Segment
//! parameters are integrated out.
//!
//! Moves, each chosen with probability 1/3:
//! - shift: `s_i + U(−δ, δ)`, rejected if it leaves `(s_{i−1}, s_{i+1})`;
//! - birth: pick one of the `k+1` gaps uniformly, place a point uniformly in it;
//! - death: remove one of the `k` points uniformly.
//!
//! Birth into gap `(L, R)` is accepted with `λ (R − L) · m(L,s) m(s,R) / m(L,R)`;
//! death uses the reciprocal. `λ` then gets its conjugate gamma update.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::marginal::{Conjugate, SuffStats};
use crate::changepoint::{Dataset, GapRate, Partition};
use crate::error::{invalid, require_positive, Error, Result};
use crate::mixture::{BaselineSpec, KernelSpec, NormalAtom};
use crate::rng::RandomStream;

/// Prior on the gap rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RatePrior {
    Gamma { shape: f64, rate: f64 },
    Fixed(f64),
}

impl Default for RatePrior {
    fn default() -> Self {
        RatePrior::Gamma {
            shape: 1.0,
            rate: 1.0,
        }
    }
}

impl RatePrior {
    fn validate(&self) -> Result<()> {
        match *self {
            RatePrior::Gamma { shape, rate } => {
                require_positive("rate_shape", shape)?;
                require_positive("rate_rate", rate)
            }
            RatePrior::Fixed(l) => require_positive("fixed_rate", l),
        }
    }

    fn initial(&self) -> f64 {
        match *self {
            RatePrior::Gamma { shape, rate } => shape / rate,
            RatePrior::Fixed(l) => l,
        }
    }

    fn ln_density(&self, lambda: f64) -> f64 {
        match *self {
            RatePrior::Gamma { shape, rate } => {
                shape * rate.ln() - statrs::function::gamma::ln_gamma(shape)
                    + (shape - 1.0) * lambda.ln()
                    - rate * lambda
            }
            RatePrior::Fixed(_) => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub rate_prior: RatePrior,
    pub baseline: BaselineSpec,
    pub kernel: KernelSpec,
    pub n_iterations: usize,
    pub n_burnin: usize,
    /// Half-width of the uniform shift proposal, in time units.
    pub proposal_scale: f64,
    pub moves_per_iteration: usize,
    /// `false` samples the prior; used to check the transdimensional moves.
    pub use_likelihood: bool,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        Self {
            rate_prior: RatePrior::default(),
            baseline: BaselineSpec::default(),
            kernel: KernelSpec::Normal,
            n_iterations: 20_000,
            n_burnin: 5_000,
            proposal_scale: 0.5,
            moves_per_iteration: 5,
            use_likelihood: true,
        }
    }
}

impl InferenceConfig {
    pub fn validate(&self) -> Result<()> {
        self.rate_prior.validate()?;
        if self.n_iterations <= self.n_burnin {
            return Err(invalid(
                "n_iterations",
                format!(
                    "must exceed n_burnin ({} <= {})",
                    self.n_iterations, self.n_burnin
                ),
            ));
        }
        require_positive("proposal_scale", self.proposal_scale)?;
        if self.moves_per_iteration == 0 {
            return Err(invalid("moves_per_iteration", "must be at least 1"));
        }
        Conjugate::new(&self.baseline, self.kernel, 0.0).map(|_| ())
    }
}

/// One retained iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    pub taus: Vec<f64>,
    pub lambda: f64,
    pub log_posterior: f64,
    /// One conditional-posterior draw of `θ` per segment, left to right.
    pub theta: Vec<NormalAtom<f64>>,
}

impl Draw {
    /// Completes the in-window change points into a partition covering
    /// `horizon`, continuing past the window with prior gaps at this draw's rate.
    pub fn to_partition<R: Rng + ?Sized>(
        &self,
        window: f64,
        horizon: f64,
        rng: &mut R,
    ) -> Result<Partition> {
        let rate = GapRate::new(self.lambda)?;
        let mut taus = self.taus.clone();
        let mut last = window;
        loop {
            last += rate.sample_gap(rng);
            taus.push(last);
            if last >= horizon {
                break;
            }
        }
        Partition::from_taus(taus, horizon)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Acceptance {
    pub shift: MoveStats,
    pub birth: MoveStats,
    pub death: MoveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    /// Right end `T = t_n` of the inferred window `(0, T]`.
    pub window: f64,
    pub draws: Vec<Draw>,
    pub acceptance: Acceptance,
}

/// Prefix sums over the data for O(log n) segment statistics.
struct SegmentIndex<'a> {
    times: &'a [f64],
    cum: Vec<(f64, f64)>,
    shift: f64,
    conj: Conjugate,
    use_likelihood: bool,
}

impl<'a> SegmentIndex<'a> {
    fn new(data: &'a Dataset, config: &InferenceConfig) -> Result<Self> {
        let ys = data.values();
        let shift = ys.iter().sum::<f64>() / ys.len() as f64;
        let mut cum = Vec::with_capacity(ys.len() + 1);
        let (mut s, mut s2) = (0.0, 0.0);
        cum.push((0.0, 0.0));
        for y in ys {
            let d = y - shift;
            s += d;
            s2 += d * d;
            cum.push((s, s2));
        }
        Ok(Self {
            times: data.times(),
            cum,
            shift,
            conj: Conjugate::new(&config.baseline, config.kernel, shift)?,
            use_likelihood: config.use_likelihood,
        })
    }

    /// Observations with `lo < t ≤ hi`.
    fn stats(&self, lo: f64, hi: f64) -> SuffStats {
        let a = self.times.partition_point(|t| *t <= lo);
        let b = self.times.partition_point(|t| *t <= hi);
        SuffStats {
            n: (b - a) as f64,
            sum: self.cum[b].0 - self.cum[a].0,
            sum_sq: self.cum[b].1 - self.cum[a].1,
        }
    }

    fn ln_evidence(&self, lo: f64, hi: f64) -> f64 {
        if self.use_likelihood {
            self.conj.ln_evidence(&self.stats(lo, hi))
        } else {
            0.0
        }
    }
}

struct Chain<'a> {
    index: SegmentIndex<'a>,
    window: f64,
    taus: Vec<f64>,
    /// Evidence of each of the `k + 1` segments.
    seg: Vec<f64>,
    lambda: f64,
}

impl Chain<'_> {
    fn bound(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 { 0.0 } else { self.taus[i - 1] };
        let hi = if i == self.taus.len() {
            self.window
        } else {
            self.taus[i]
        };
        (lo, hi)
    }

    fn shift<R: Rng + ?Sized>(&mut self, delta: f64, rng: &mut R) -> Option<bool> {
        if self.taus.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.taus.len());
        let proposal = self.taus[i] + delta * (2.0 * rng.random::<f64>() - 1.0);
        let (lo, _) = self.bound(i);
        let (_, hi) = self.bound(i + 1);
        if !(proposal > lo && proposal < hi) {
            return Some(false);
        }
        let left = self.index.ln_evidence(lo, proposal);
        let right = self.index.ln_evidence(proposal, hi);
        let log_a = left + right - self.seg[i] - self.seg[i + 1];
        let accept = log_a >= 0.0 || rng.random::<f64>().ln() < log_a;
        if accept {
            self.taus[i] = proposal;
            self.seg[i] = left;
            self.seg[i + 1] = right;
        }
        Some(accept)
    }

    fn birth<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let g = rng.random_range(0..=self.taus.len());
        let (lo, hi) = self.bound(g);
        let s = lo + (hi - lo) * rng.random::<f64>();
        if !(s > lo && s < hi) {
            return false;
        }
        let left = self.index.ln_evidence(lo, s);
        let right = self.index.ln_evidence(s, hi);
        let log_a = self.lambda.ln() + (hi - lo).ln() + left + right - self.seg[g];
        let accept = log_a >= 0.0 || rng.random::<f64>().ln() < log_a;
        if accept {
            self.taus.insert(g, s);
            self.seg[g] = left;
            self.seg.insert(g + 1, right);
        }
        accept
    }

    fn death<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<bool> {
        if self.taus.is_empty() {
            return None;
        }
        let i = rng.random_range(0..self.taus.len());
        let (lo, _) = self.bound(i);
        let (_, hi) = self.bound(i + 1);
        let merged = self.index.ln_evidence(lo, hi);
        let log_a = merged - self.seg[i] - self.seg[i + 1] - self.lambda.ln() - (hi - lo).ln();
        let accept = log_a >= 0.0 || rng.random::<f64>().ln() < log_a;
        if accept {
            self.taus.remove(i);
            self.seg.remove(i + 1);
            self.seg[i] = merged;
        }
        Some(accept)
    }

    fn update_rate<R: Rng + ?Sized>(&mut self, prior: &RatePrior, rng: &mut R) {
        if let RatePrior::Gamma { shape, rate } = *prior {
            let k = self.taus.len() as f64;
            self.lambda = Gamma::new(shape + k, 1.0 / (rate + self.window))
                .expect("positive")
                .sample(rng)
                .max(f64::MIN_POSITIVE);
        }
    }

    fn log_posterior(&self, prior: &RatePrior) -> f64 {
        let k = self.taus.len() as f64;
        self.seg.iter().sum::<f64>() + k * self.lambda.ln() - self.lambda * self.window
            + prior.ln_density(self.lambda)
    }

    fn theta<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<NormalAtom<f64>> {
        (0..=self.taus.len())
            .map(|i| {
                let (lo, hi) = self.bound(i);
                self.index
                    .conj
                    .sample_posterior(&self.index.stats(lo, hi), self.index.shift, rng)
            })
            .collect()
    }
}

/// Runs one chain started from no change points and `λ` at its prior mean.
pub fn run_sampler<R: Rng + ?Sized>(
    data: &Dataset,
    config: &InferenceConfig,
    rng: &mut R,
) -> Result<PosteriorDraws> {
    config.validate()?;
    if data.len() < 2 {
        return Err(Error::Data(format!(
            "need at least 2 observations, got {}",
            data.len()
        )));
    }
    let index = SegmentIndex::new(data, config)?;
    let window = data.last_time();
    let whole = index.ln_evidence(0.0, window);
    let mut chain = Chain {
        index,
        window,
        taus: Vec::new(),
        seg: vec![whole],
        lambda: config.rate_prior.initial(),
    };
    let mut acceptance = Acceptance::default();
    let mut draws = Vec::with_capacity(config.n_iterations - config.n_burnin);
    for iteration in 0..config.n_iterations {
        for _ in 0..config.moves_per_iteration {
            match rng.random_range(0..3u8) {
                0 => {
                    if let Some(a) = chain.shift(config.proposal_scale, rng) {
                        acceptance.shift.record(a);
                    }
                }
                1 => acceptance.birth.record(chain.birth(rng)),
                _ => {
                    if let Some(a) = chain.death(rng) {
                        acceptance.death.record(a);
                    }
                }
            }
        }
        chain.update_rate(&config.rate_prior, rng);
        if iteration >= config.n_burnin {
            draws.push(Draw {
                iteration,
                taus: chain.taus.clone(),
                lambda: chain.lambda,
                log_posterior: chain.log_posterior(&config.rate_prior),
                theta: chain.theta(rng),
            });
        }
    }
    Ok(PosteriorDraws {
        window,
        draws,
        acceptance,
    })
}

/// Independent chains in parallel; chain `c` runs on `rng.replicate(c)`.
pub fn run_chains(
    data: &Dataset,
    config: &InferenceConfig,
    n_chains: usize,
    rng: &RandomStream,
) -> Result<Vec<PosteriorDraws>> {
    if n_chains == 0 {
        return Err(invalid("chains", "need at least one chain"));
    }
    (0..n_chains as u64)
        .into_par_iter()
        .map(|c| run_sampler(data, config, &mut rng.replicate(c)))
        .collect()
}
