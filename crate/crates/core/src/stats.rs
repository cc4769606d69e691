//! Small descriptive-statistics helpers with a fixed summation order.

use serde::{Deserialize, Serialize};

use crate::scalar::compensated_sum;

/// Monte Carlo summary of `E{D(h)}` at one lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapEstimate {
    pub h: f64,
    pub mean: f64,
    pub std_error: f64,
    pub n_reps: usize,
}

impl OverlapEstimate {
    /// Summarizes per-replicate overlaps in the order given.
    pub fn from_samples(h: f64, samples: &[f64]) -> Self {
        let (mean, sd) = mean_sd(samples);
        let n = samples.len();
        Self {
            h,
            mean,
            std_error: if n > 0 {
                sd / (n as f64).sqrt()
            } else {
                f64::NAN
            },
            n_reps: n,
        }
    }

    /// `(mean − target) / SE`; infinite when SE is zero and the mean misses.
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = self.mean - target;
        if self.std_error > 0.0 {
            diff / self.std_error
        } else if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    }
}

/// Mean and sample standard deviation (n − 1 denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = compensated_sum(xs.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, (ss / (n - 1) as f64).sqrt())
}

/// Standard error of the mean from non-overlapping batch means.
///
/// Accounts for autocorrelation in MCMC output.
pub fn batch_means_se(xs: &[f64], n_batches: usize) -> f64 {
    let n_batches = n_batches.max(2);
    let size = xs.len() / n_batches;
    if size == 0 {
        return mean_sd(xs).1 / (xs.len() as f64).sqrt();
    }
    let means: Vec<f64> = xs
        .chunks_exact(size)
        .take(n_batches)
        .map(|c| compensated_sum(c.iter().copied()) / size as f64)
        .collect();
    mean_sd(&means).1 / (means.len() as f64).sqrt()
}

/// Linear-interpolation quantile of sorted data (Hyndman–Fan type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let pos = p.clamp(0.0, 1.0) * (n - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            let frac = pos - lo as f64;
            sorted[lo] + (sorted[hi] - sorted[lo]) * frac
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_of_bernoulli() {
        let xs: Vec<f64> = (0..100)
            .map(|i| if i % 4 == 0 { 0.0 } else { 1.0 })
            .collect();
        let e = OverlapEstimate::from_samples(0.1, &xs);
        assert_eq!(e.mean, 0.75);
        let sd = (0.75f64 * 0.25 * 100.0 / 99.0).sqrt();
        assert!((e.std_error - sd / 10.0).abs() < 1e-15);
    }

    #[test]
    fn quantiles() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&xs, 0.5), 2.5);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 4.0);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn z_score_edge_cases() {
        let exact = OverlapEstimate {
            h: 0.0,
            mean: 1.0,
            std_error: 0.0,
            n_reps: 10,
        };
        assert_eq!(exact.z_score(1.0), 0.0);
        assert!(exact.z_score(0.5).is_infinite());
    }

    #[test]
    fn batch_means_iid_close_to_naive() {
        let mut rng = crate::rng::RandomStream::new(9, 0);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| rand::Rng::random::<f64>(&mut rng))
            .collect();
        let naive = mean_sd(&xs).1 / 100.0;
        let bm = batch_means_se(&xs, 50);
        assert!(bm > 0.3 * naive && bm < 3.0 * naive);
    }
}
