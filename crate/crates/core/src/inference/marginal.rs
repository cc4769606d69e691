//! Closed-form segment evidence under the normal / normal-inverse-gamma pair.
//!
//! With `σ² ~ IG(α₀, β₀)`, `μ | σ² ~ N(μ₀, σ²/κ₀)` and `n` observations of mean
//! `ȳ` and centred sum of squares `S`:
//!
//! ```text
//! κₙ = κ₀ + n,  αₙ = α₀ + n/2,  βₙ = β₀ + S/2 + κ₀ n (ȳ − μ₀)² / (2κₙ)
//! ln m = ln Γ(αₙ) − ln Γ(α₀) + α₀ ln β₀ − αₙ ln βₙ + ½ ln(κ₀/κₙ) − (n/2) ln 2π
//! ```

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::mixture::{BaselineSpec, KernelSpec, NormalAtom};
use crate::scalar::compensated_sum;

/// Count, sum and sum of squares of a segment (values pre-shifted by a constant).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct SuffStats {
    pub n: f64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl SuffStats {
    pub fn from_values(ys: &[f64], shift: f64) -> Self {
        Self {
            n: ys.len() as f64,
            sum: compensated_sum(ys.iter().map(|y| y - shift)),
            sum_sq: compensated_sum(ys.iter().map(|y| (y - shift) * (y - shift))),
        }
    }

    fn mean_and_ss(&self) -> (f64, f64) {
        let mean = self.sum / self.n;
        (mean, (self.sum_sq - self.sum * mean).max(0.0))
    }
}

/// Conjugate hyperparameters with the data shift folded into the prior mean.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Conjugate {
    mu: f64,
    kappa: f64,
    alpha: f64,
    beta: f64,
    const_term: f64,
}

impl Conjugate {
    pub fn new(baseline: &BaselineSpec, kernel: KernelSpec, shift: f64) -> Result<Self> {
        match (baseline, kernel) {
            (
                &BaselineSpec::NormalInverseGamma {
                    mu,
                    kappa,
                    alpha,
                    beta,
                },
                KernelSpec::Normal,
            ) => Ok(Self {
                mu: mu - shift,
                kappa,
                alpha,
                beta,
                const_term: alpha * beta.ln() - ln_gamma(alpha),
            }),
            #[allow(unreachable_patterns)]
            _ => Err(Error::Unsupported(format!(
                "no closed-form evidence for kernel {kernel:?} with baseline {baseline:?}"
            ))),
        }
    }

    fn posterior(&self, s: &SuffStats) -> (f64, f64, f64, f64) {
        if s.n == 0.0 {
            return (self.mu, self.kappa, self.alpha, self.beta);
        }
        let (mean, ss) = s.mean_and_ss();
        let kappa_n = self.kappa + s.n;
        let alpha_n = self.alpha + 0.5 * s.n;
        let dev = mean - self.mu;
        let beta_n = self.beta + 0.5 * ss + self.kappa * s.n * dev * dev / (2.0 * kappa_n);
        let mu_n = (self.kappa * self.mu + s.sum) / kappa_n;
        (mu_n, kappa_n, alpha_n, beta_n)
    }

    pub fn ln_evidence(&self, s: &SuffStats) -> f64 {
        if s.n == 0.0 {
            return 0.0;
        }
        let (_, kappa_n, alpha_n, beta_n) = self.posterior(s);
        ln_gamma(alpha_n) + self.const_term - alpha_n * beta_n.ln()
            + 0.5 * (self.kappa / kappa_n).ln()
            - 0.5 * s.n * (std::f64::consts::TAU).ln()
    }

    /// Draw of `θ` from its conditional posterior, shifted back to data units.
    pub fn sample_posterior<R: Rng + ?Sized>(
        &self,
        s: &SuffStats,
        shift: f64,
        rng: &mut R,
    ) -> NormalAtom<f64> {
        let (mu_n, kappa_n, alpha_n, beta_n) = self.posterior(s);
        let precision = Gamma::new(alpha_n, 1.0 / beta_n)
            .expect("positive")
            .sample(rng);
        let variance = (1.0 / precision).max(f64::MIN_POSITIVE);
        let mean = Normal::new(mu_n, (variance / kappa_n).sqrt())
            .expect("finite")
            .sample(rng);
        NormalAtom {
            mean: mean + shift,
            variance,
        }
    }
}

/// `ln ∫ Π_i K(y_i|θ) dG₀(θ)` for one segment; zero for an empty segment.
pub fn segment_marginal_likelihood(
    values: &[f64],
    baseline: &BaselineSpec,
    kernel: KernelSpec,
) -> Result<f64> {
    let shift = if values.is_empty() {
        0.0
    } else {
        compensated_sum(values.iter().copied()) / values.len() as f64
    };
    let conj = Conjugate::new(baseline, kernel, shift)?;
    Ok(conj.ln_evidence(&SuffStats::from_values(values, shift)))
}
