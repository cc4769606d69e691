//! Geometric weights driven by a two-type Wright–Fisher diffusion.
//!
//! `ω_j(t) = λ_t(1−λ_t)^{j−1}`, where `λ_t` has stationary law `Beta(a, b)`
//! and moves over a lag `h` by the exact transition mixture
//!
//! ```text
//! m ~ p_h(m) = (a+b)_m e^{−mch} (1−e^{−ch})^{a+b} / m!
//! k | m ~ Binomial(m, λ_s)
//! λ_t | m, k ~ Beta(a + k, b + m − k)
//! ```
//!
//! `p_h` is the negative-binomial law with size `a+b` and "success"
//! probability `1 − e^{−ch}` (failures counted), so `m` is drawn as a
//! gamma–Poisson mixture.
//!
//! The overlap of two geometric weight sequences is a geometric series with
//! ratio `(1−λ₁)(1−λ₂)`:
//!
//! ```text
//! Σ_j λ₁λ₂ [(1−λ₁)(1−λ₂)]^{j−1} = λ₁λ₂ / (1 − (1−λ₁)(1−λ₂)) = λ₁λ₂ / (λ₁ + λ₂ − λ₁λ₂)
//! ```

use rand::Rng;
use rand_distr::{Beta, Binomial, Distribution, Gamma, Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::scalar::Scalar;
use crate::special::{ln_one_minus_exp_neg, ln_pochhammer};
use crate::weights::{ComponentIndex, TimePoint, WeightVector};

/// Distance kept between sampled `λ` and the boundary of `(0, 1)`.
pub const LAMBDA_CLAMP: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl DiffusionParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        require_positive("a", a)?;
        require_positive("b", b)?;
        require_positive("c", c)?;
        Ok(Self { a, b, c })
    }

    pub fn stationary_mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    pub fn stationary_variance(&self) -> f64 {
        let s = self.a + self.b;
        self.a * self.b / (s * s * (s + 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionState {
    pub t: TimePoint,
    pub lambda: f64,
}

/// The latent `(m, k)` behind one transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionDraw {
    pub m: u64,
    pub k: u64,
}

fn clamp_open(x: f64) -> f64 {
    x.clamp(LAMBDA_CLAMP, 1.0 - LAMBDA_CLAMP)
}

fn require_lag(h: f64) -> Result<()> {
    require_positive("h", h)
}

/// `λ_0 ~ Beta(a, b)` at `t = 0`.
pub fn stationary_sample<R: Rng + ?Sized>(params: &DiffusionParams, rng: &mut R) -> DiffusionState {
    let beta = Beta::new(params.a, params.b).expect("validated params");
    DiffusionState {
        t: TimePoint::new(0.0).expect("zero"),
        lambda: clamp_open(beta.sample(rng)),
    }
}

/// `ln p_h(m)`.
pub fn ln_jump_pmf(params: &DiffusionParams, h: f64, m: u64) -> Result<f64> {
    require_lag(h)?;
    let r = params.a + params.b;
    let ch = params.c * h;
    let mf = m as f64;
    let ln_fact = statrs::function::factorial::ln_factorial(m);
    Ok(ln_pochhammer(r, m) - ln_fact - mf * ch + r * ln_one_minus_exp_neg(ch))
}

/// `p_h(m) = (a+b)_m e^{−mch} (1−e^{−ch})^{a+b} / m!`.
pub fn jump_pmf(params: &DiffusionParams, h: f64, m: u64) -> Result<f64> {
    ln_jump_pmf(params, h, m).map(f64::exp)
}

/// `m ~ p_h`.
pub fn jump_sample<R: Rng + ?Sized>(params: &DiffusionParams, h: f64, rng: &mut R) -> Result<u64> {
    require_lag(h)?;
    let ch = params.c * h;
    // odds e^{-ch}/(1-e^{-ch}) = 1/(e^{ch}-1)
    let odds = 1.0 / ch.exp_m1();
    if odds == 0.0 {
        return Ok(0);
    }
    let rate = Gamma::new(params.a + params.b, odds)
        .map_err(|e| invalid("h", e.to_string()))?
        .sample(rng);
    if rate <= 0.0 {
        return Ok(0);
    }
    let m: f64 = Poisson::new(rate)
        .map_err(|e| invalid("h", format!("jump rate {rate}: {e}")))?
        .sample(rng);
    Ok(m as u64)
}

/// One exact transition over lag `h`, returning the latent draw as well.
pub fn transition_sample_with_draw<R: Rng + ?Sized>(
    params: &DiffusionParams,
    state: &DiffusionState,
    h: f64,
    rng: &mut R,
) -> Result<(DiffusionState, TransitionDraw)> {
    let m = jump_sample(params, h, rng)?;
    let k = if m == 0 {
        0
    } else {
        Binomial::new(m, state.lambda)
            .map_err(|e| invalid("lambda", e.to_string()))?
            .sample(rng)
    };
    let beta = Beta::new(params.a + k as f64, params.b + (m - k) as f64)
        .map_err(|e| invalid("a", e.to_string()))?;
    let next = DiffusionState {
        t: TimePoint::new(state.t.get() + h)?,
        lambda: clamp_open(beta.sample(rng)),
    };
    Ok((next, TransitionDraw { m, k }))
}

/// `λ_{t+h} | λ_t` by the exact transition mixture.
pub fn transition_sample<R: Rng + ?Sized>(
    params: &DiffusionParams,
    state: &DiffusionState,
    h: f64,
    rng: &mut R,
) -> Result<DiffusionState> {
    if !(state.lambda > 0.0 && state.lambda < 1.0) {
        return Err(invalid(
            "lambda",
            format!("state must lie in (0,1), got {}", state.lambda),
        ));
    }
    transition_sample_with_draw(params, state, h, rng).map(|(s, _)| s)
}

fn require_open_unit<T: Scalar>(lambda: T) -> Result<()> {
    if lambda > T::zero() && lambda < T::one() {
        Ok(())
    } else {
        Err(invalid(
            "lambda",
            format!("must lie in (0,1), got {lambda}"),
        ))
    }
}

/// `w_j = λ(1−λ)^{j−1}` for `j ≤ K`, tail `(1−λ)^K`.
pub fn geometric_weights<T: Scalar>(lambda: T, k: usize) -> Result<WeightVector<T>> {
    require_open_unit(lambda)?;
    if k == 0 {
        return Err(invalid("K", "need at least one component"));
    }
    let q = T::one() - lambda;
    let mut weights = Vec::with_capacity(k);
    let mut survive = T::one();
    for _ in 0..k {
        weights.push(lambda * survive);
        survive = survive * q;
    }
    WeightVector::new(weights, survive)
}

/// `z ~ Geometric(λ)` on `{1, 2, …}` without truncation.
pub fn sample_z_exact<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Result<ComponentIndex> {
    require_open_unit(lambda)?;
    let failures = Geometric::new(lambda)
        .map_err(|e| invalid("lambda", e.to_string()))?
        .sample(rng);
    Ok(ComponentIndex::new(failures.saturating_add(1)).expect("at least one"))
}

/// `Σ_j ω_j(λ₁) ω_j(λ₂) = λ₁λ₂ / (λ₁ + λ₂ − λ₁λ₂)` for `λ ∈ (0, 1]`.
pub fn overlap_closed_form<T: Scalar>(lambda1: T, lambda2: T) -> Result<T> {
    let ok = |x: T| x > T::zero() && x <= T::one();
    if !ok(lambda1) || !ok(lambda2) {
        return Err(invalid(
            "lambda",
            format!("overlap needs both in (0,1], got ({lambda1}, {lambda2})"),
        ));
    }
    Ok(lambda1 * lambda2 / (lambda1 + lambda2 - lambda1 * lambda2))
}

/// `lim_{h→0} E{D(h)} = E{λ/(2−λ)}` for `λ ~ Beta(a, b)`.
///
/// Uses `λ/(2−λ) = Σ_{n≥1} (λ/2)^n` and the beta moments
/// `E λ^n = Π_{i<n} (a+i)/(a+b+i)`.
pub fn stationary_overlap_limit(params: &DiffusionParams) -> f64 {
    let (a, s) = (params.a, params.a + params.b);
    let mut moment = 1.0;
    let mut total = 0.0;
    for n in 1..2000 {
        let i = (n - 1) as f64;
        moment *= (a + i) / (s + i) * 0.5;
        total += moment;
        if moment < 1e-18 * total {
            break;
        }
    }
    total
}

/// One `λ` path on a strictly increasing grid: a stationary draw at the first
/// point and exact transitions across each gap.
pub fn simulate_path<R: Rng + ?Sized>(
    params: &DiffusionParams,
    grid: &[TimePoint],
    rng: &mut R,
) -> Result<Vec<DiffusionState>> {
    let Some(first) = grid.first() else {
        return Err(Error::Empty("time grid"));
    };
    if let Some(i) = grid.windows(2).position(|w| w[1].get() <= w[0].get()) {
        return Err(Error::NonIncreasingGrid { index: i + 1 });
    }
    let mut state = stationary_sample(params, rng);
    state.t = *first;
    let mut path = Vec::with_capacity(grid.len());
    path.push(state);
    for w in grid.windows(2) {
        let h = w[1].get() - w[0].get();
        let mut next = transition_sample(params, &state, h, rng)?;
        next.t = w[1];
        path.push(next);
        state = next;
    }
    Ok(path)
}
