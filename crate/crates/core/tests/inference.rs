use ctmix::changepoint::Dataset;
use ctmix::inference::{
    posterior_summary, run_chains, run_sampler, InferenceConfig, PosteriorDraws, RatePrior,
};
use ctmix::mixture::{BaselineSpec, KernelSpec};
use ctmix::stats::{batch_means_se, mean_sd};
use ctmix::RandomStream;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::gamma::ln_gamma;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// ∫∫ N(y | μ, σ²) N(μ | μ₀, σ²/κ) IG(σ² | α, β) dμ dσ², over (μ, ln σ²).
fn evidence_by_quadrature(y: f64, mu0: f64, kappa: f64, alpha: f64, beta: f64) -> f64 {
    let ln_ig = |v: f64| alpha * beta.ln() - ln_gamma(alpha) - alpha * v - beta * (-v).exp();
    let normal = |x: f64, m: f64, var: f64| {
        (-(x - m) * (x - m) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
    };
    let inner = |v: f64| {
        let var = v.exp();
        // integrate μ where the product of the two normals has its mass
        let centre = (kappa * mu0 + y) / (kappa + 1.0);
        let half = 14.0 * (var / (kappa + 1.0)).sqrt();
        let f = |mu: f64| normal(y, mu, var) * normal(mu, mu0, var / kappa);
        simpson(f, centre - half, centre + half, 600) * ln_ig(v).exp()
    };
    let lo = beta.ln() - 12.0;
    let hi = beta.ln() + 80.0 / alpha;
    simpson(inner, lo, hi, 6000)
}

#[test]
fn single_observation_evidence_matches_quadrature() {
    let mut rng = RandomStream::new(11, 0);
    for _ in 0..50 {
        let mu0 = rng.random_range(-2.0..2.0);
        let kappa = rng.random_range(0.05..5.0);
        let alpha = rng.random_range(1.0..6.0);
        let beta = rng.random_range(0.2..4.0);
        let y = rng.random_range(-4.0..4.0);
        let g0 = BaselineSpec::normal_inverse_gamma(mu0, kappa, alpha, beta).unwrap();
        let closed =
            ctmix::inference::segment_marginal_likelihood(&[y], &g0, KernelSpec::Normal).unwrap();
        let quad = evidence_by_quadrature(y, mu0, kappa, alpha, beta).ln();
        assert!(
            (closed - quad).abs() < 1e-6,
            "{mu0} {kappa} {alpha} {beta} {y}: {closed} vs {quad}"
        );
    }
}

#[test]
fn degenerate_baseline_factorizes() {
    // θ pinned at (μ₀, σ₀²): every segment is i.i.d. N(μ₀, σ₀²), so evidence adds over a split.
    let (mu0, s2) = (0.3, 0.8);
    let big = 1e6;
    let g0 = BaselineSpec::normal_inverse_gamma(mu0, big, big, big * s2).unwrap();
    let a = [0.1, -0.7, 1.2];
    let b = [2.5, 0.4];
    let whole: Vec<f64> = a.iter().chain(b.iter()).copied().collect();
    let ev = |xs: &[f64]| {
        ctmix::inference::segment_marginal_likelihood(xs, &g0, KernelSpec::Normal).unwrap()
    };
    let iid: f64 = whole
        .iter()
        .map(|y| -0.5 * (2.0 * std::f64::consts::PI * s2).ln() - (y - mu0) * (y - mu0) / (2.0 * s2))
        .sum();
    assert!((ev(&whole) - (ev(&a) + ev(&b))).abs() < 1e-4);
    assert!((ev(&whole) - iid).abs() < 1e-4);

    // a diffuse baseline does not factorize
    let wide = BaselineSpec::default();
    let ev = |xs: &[f64]| {
        ctmix::inference::segment_marginal_likelihood(xs, &wide, KernelSpec::Normal).unwrap()
    };
    assert!((ev(&whole) - (ev(&a) + ev(&b))).abs() > 1e-3);
}

fn one_change_point_data(seed: u64) -> Dataset {
    let mut rng = RandomStream::new(seed, 0);
    let times: Vec<f64> = (1..=100).map(|i| i as f64 / 10.0).collect();
    let values = times
        .iter()
        .map(|t| {
            Normal::new(if *t <= 5.0 { 0.0 } else { 3.0 }, 0.5)
                .unwrap()
                .sample(&mut rng)
        })
        .collect();
    Dataset::new(times, values).unwrap()
}

#[test]
fn recovers_single_change_point() {
    let data = one_change_point_data(5);
    let config = InferenceConfig::default();
    let chains = run_chains(&data, &config, 2, &RandomStream::new(6, 0)).unwrap();
    let s = posterior_summary(&chains, &[0.0, 5.0, 10.0]).unwrap();
    assert_eq!(s.count_mode, 1);
    let taus = s.taus.unwrap();
    assert!((taus.median - 5.0).abs() <= 0.5, "median {}", taus.median);
    assert!(chains
        .iter()
        .all(|c| c.draws.len() == config.n_iterations - config.n_burnin));
}

#[test]
fn flat_strong_data_has_no_change_point() {
    let mut rng = RandomStream::new(7, 0);
    let times: Vec<f64> = (1..=200).map(|i| i as f64 / 20.0).collect();
    let values = times
        .iter()
        .map(|_| Normal::new(1.0, 0.1).unwrap().sample(&mut rng))
        .collect();
    let data = Dataset::new(times, values).unwrap();
    let draws = run_sampler(
        &data,
        &InferenceConfig::default(),
        &mut RandomStream::new(8, 0),
    )
    .unwrap();
    let s = posterior_summary(std::slice::from_ref(&draws), &[]).unwrap();
    let p0 = s
        .count_distribution
        .iter()
        .find(|(k, _)| *k == 0)
        .map_or(0.0, |(_, p)| *p);
    assert!(p0 > 0.9, "P(k=0) = {p0}");
}

#[test]
fn prior_is_recovered_without_likelihood() {
    let data = Dataset::new(
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
        vec![0.0, 9.0, -3.0, 4.0, 1.0],
    )
    .unwrap();
    let rate = 1.3;
    let config = InferenceConfig {
        rate_prior: RatePrior::Fixed(rate),
        use_likelihood: false,
        n_iterations: 12_000,
        n_burnin: 2_000,
        ..Default::default()
    };
    let draws = run_sampler(&data, &config, &mut RandomStream::new(9, 0)).unwrap();
    let counts: Vec<f64> = draws.draws.iter().map(|d| d.taus.len() as f64).collect();
    assert_eq!(counts.len(), 10_000);
    let (mean, sd) = mean_sd(&counts);
    let se = batch_means_se(&counts, 50);
    let expected = rate * 5.0;
    assert!(
        (mean - expected).abs() < 4.0 * se,
        "{mean} vs {expected} (se {se})"
    );
    // Poisson count: variance equals mean
    assert!((sd * sd / expected - 1.0).abs() < 0.15);
}

/// Posterior over the four ways to split observations at t = 1, 2, 3:
/// a split between t_i and t_{i+1} happens iff a change point falls in that gap.
fn brute_force(data: &Dataset, gap_prob: impl Fn(f64, bool, bool) -> f64) -> [f64; 4] {
    let y = data.values();
    let ev = |xs: &[f64]| {
        ctmix::inference::segment_marginal_likelihood(
            xs,
            &BaselineSpec::default(),
            KernelSpec::Normal,
        )
        .unwrap()
    };
    let configs = [(false, false), (true, false), (false, true), (true, true)];
    let mut p = [0.0; 4];
    for (i, (g1, g2)) in configs.iter().enumerate() {
        let segs: Vec<&[f64]> = match (g1, g2) {
            (false, false) => vec![y],
            (true, false) => vec![&y[..1], &y[1..]],
            (false, true) => vec![&y[..2], &y[2..]],
            (true, true) => vec![&y[..1], &y[1..2], &y[2..]],
        };
        let ln_ev: f64 = segs.iter().map(|s| ev(s)).sum();
        p[i] = gap_prob(1.0, *g1, *g2) * ln_ev.exp();
    }
    let z: f64 = p.iter().sum();
    p.map(|x| x / z)
}

fn sampler_frequencies(draws: &PosteriorDraws) -> [f64; 4] {
    let mut f = [0.0; 4];
    for d in &draws.draws {
        let g1 = d.taus.iter().any(|t| *t > 1.0 && *t < 2.0);
        let g2 = d.taus.iter().any(|t| *t > 2.0 && *t < 3.0);
        f[usize::from(g1) + 2 * usize::from(g2)] += 1.0;
    }
    f.map(|x| x / draws.draws.len() as f64)
}

fn total_variation(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

fn three_points() -> Dataset {
    Dataset::new(vec![1.0, 2.0, 3.0], vec![0.2, 1.4, -0.9]).unwrap()
}

#[test]
fn three_point_posterior_fixed_rate() {
    let lambda = 0.8;
    let data = three_points();
    // gaps have length 1; P(at least one point) = 1 − e^{−λ}
    let exact = brute_force(&data, |len, g1, g2| {
        let p = 1.0 - (-lambda * len).exp();
        (if g1 { p } else { 1.0 - p }) * (if g2 { p } else { 1.0 - p })
    });
    let config = InferenceConfig {
        rate_prior: RatePrior::Fixed(lambda),
        n_iterations: 110_000,
        n_burnin: 10_000,
        ..Default::default()
    };
    let draws = run_sampler(&data, &config, &mut RandomStream::new(10, 0)).unwrap();
    let tv = total_variation(&exact, &sampler_frequencies(&draws));
    assert!(tv < 0.02, "TV {tv}: exact {exact:?}");
}

#[test]
fn three_point_posterior_gamma_rate() {
    let (shape, rate): (f64, f64) = (2.0, 1.5);
    let data = three_points();
    // integrate the gap indicators against the gamma prior on λ
    let exact = brute_force(&data, |len, g1, g2| {
        let f = |l: f64| {
            let p = 1.0 - (-l * len).exp();
            let dens =
                (shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * l.ln() - rate * l).exp();
            dens * (if g1 { p } else { 1.0 - p }) * (if g2 { p } else { 1.0 - p })
        };
        simpson(f, 1e-12, 60.0, 200_000)
    });
    let config = InferenceConfig {
        rate_prior: RatePrior::Gamma { shape, rate },
        n_iterations: 110_000,
        n_burnin: 10_000,
        ..Default::default()
    };
    let draws = run_sampler(&data, &config, &mut RandomStream::new(12, 0)).unwrap();
    let tv = total_variation(&exact, &sampler_frequencies(&draws));
    assert!(tv < 0.02, "TV {tv}: exact {exact:?}");
}

#[test]
fn doubling_iterations_is_stable() {
    let data = one_change_point_data(13);
    let run = |n: usize, seed: u64| {
        let config = InferenceConfig {
            n_iterations: n + 2_000,
            n_burnin: 2_000,
            ..Default::default()
        };
        run_sampler(&data, &config, &mut RandomStream::new(seed, 0)).unwrap()
    };
    let (short, long) = (run(10_000, 14), run(20_000, 15));
    for f in [
        |d: &ctmix::inference::Draw| d.lambda,
        |d: &ctmix::inference::Draw| d.taus.len() as f64,
    ] {
        let a: Vec<f64> = short.draws.iter().map(f).collect();
        let b: Vec<f64> = long.draws.iter().map(f).collect();
        let se = (batch_means_se(&a, 25).powi(2) + batch_means_se(&b, 25).powi(2)).sqrt();
        let diff = mean_sd(&a).0 - mean_sd(&b).0;
        assert!(diff.abs() < 4.0 * se.max(1e-9), "diff {diff} se {se}");
    }
}

#[test]
fn reproducible_given_stream() {
    let data = three_points();
    let config = InferenceConfig {
        n_iterations: 2_000,
        n_burnin: 500,
        ..Default::default()
    };
    let a = run_sampler(&data, &config, &mut RandomStream::new(16, 3)).unwrap();
    let b = run_sampler(&data, &config, &mut RandomStream::new(16, 3)).unwrap();
    assert_eq!(a, b);
    for d in &a.draws {
        assert!(d.taus.windows(2).all(|w| w[0] < w[1]));
        assert!(d.taus.iter().all(|t| *t > 0.0 && *t <= a.window));
        assert_eq!(d.theta.len(), d.taus.len() + 1);
    }
}
