//! `validate`: seeded invariant checks over every model, reported as JSON.

use ctmix::changepoint::{overlap_exact, same_component_prob, sample_partition, Dataset, GapRate};
use ctmix::experiments::{
    build_convergent_grid, estimate_overlap_curve, CurveDiagnostics, ModelSpec,
};
use ctmix::geometric::{
    geometric_weights, jump_pmf, jump_sample, overlap_closed_form, stationary_overlap_limit,
    stationary_sample, transition_sample, DiffusionParams,
};
use ctmix::inference::{run_sampler, segment_marginal_likelihood, InferenceConfig, RatePrior};
use ctmix::mixture::{BaselineSpec, KernelSpec};
use ctmix::nrm::{estimate_overlap_curve_nrm, nrm_weights, simulate_jumps, JumpSet, NrmParams};
use ctmix::stats::{batch_means_se, mean_sd};
use ctmix::weights::{overlap_statistic, sup_weight_diff};
use ctmix::{ComponentIndex, RandomStream, WeightVector};
use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::gamma::ln_gamma;

use super::{out_path, write_json};
use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::meta::Metadata;

pub const KEYS: &[Key] = &[
    key(
        "n_reps",
        Some("20000"),
        "Monte Carlo replicates per statistical check",
    ),
    key("out", Some("validate.json"), "output JSON"),
];

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Serialize)]
struct Output<'a> {
    meta: &'a Metadata,
    passed: bool,
    n_checks: usize,
    n_failed: usize,
    checks: &'a [Check],
}

type Outcome = ctmix::Result<(bool, String)>;
type NamedCheck<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn jump_pmf_normalization() -> Outcome {
    let mut worst: f64 = 0.0;
    for (a, b, c, h) in [
        (1.0, 1.0, 1.0, 0.1),
        (2.0, 3.0, 1.0, 1.0),
        (1.0, 10.0, 0.5, 0.05),
    ] {
        let p = DiffusionParams::new(a, b, c)?;
        let x = (-c * h).exp();
        let mean = (a + b) * x / (1.0 - x);
        let (mut total, mut m) = (0.0, 0u64);
        loop {
            let q = jump_pmf(&p, h, m)?;
            total += q;
            if m as f64 > mean && q < 1e-18 {
                break;
            }
            m += 1;
        }
        worst = worst.max((total - 1.0).abs());
    }
    Ok((worst < 1e-10, format!("max |sum - 1| = {worst:e}")))
}

fn jump_sample_chi_square(n: usize, rng: &RandomStream) -> Outcome {
    let p = DiffusionParams::new(2.0, 3.0, 1.0)?;
    let h = 0.1;
    let mut s = rng.clone();
    let mut counts: Vec<u64> = Vec::new();
    for _ in 0..n {
        let m = jump_sample(&p, h, &mut s)? as usize;
        if m >= counts.len() {
            counts.resize(m + 1, 0);
        }
        counts[m] += 1;
    }
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut rest_e, mut rest_o) = (n as f64, n as u64);
    for m in 0..counts.len().max(1_000) {
        let e = n as f64 * jump_pmf(&p, h, m as u64)?;
        if e < 5.0 {
            continue;
        }
        let o = counts.get(m).copied().unwrap_or(0);
        chi2 += (o as f64 - e).powi(2) / e;
        rest_e -= e;
        rest_o -= o;
        bins += 1;
    }
    if rest_e >= 5.0 {
        chi2 += (rest_o as f64 - rest_e).powi(2) / rest_e;
        bins += 1;
    }
    let pval = ChiSquared::new((bins.max(2) - 1) as f64)
        .map(|d| 1.0 - d.cdf(chi2))
        .unwrap_or(0.0);
    Ok((
        pval > 0.001,
        format!("chi2 = {chi2:.3} on {bins} bins, p = {pval:.4}"),
    ))
}

fn transition_stationarity(n: usize, rng: &RandomStream) -> Outcome {
    let mut worst: f64 = 0.0;
    for (i, (a, b, h)) in [(1.0, 1.0, 0.1), (1.0, 10.0, 1.0), (2.0, 3.0, 0.01)]
        .into_iter()
        .enumerate()
    {
        let p = DiffusionParams::new(a, b, 1.0)?;
        let mut s = rng.replicate(i as u64);
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            let start = stationary_sample(&p, &mut s);
            xs.push(transition_sample(&p, &start, h, &mut s)?.lambda);
        }
        let (mean, sd) = mean_sd(&xs);
        worst = worst.max(((mean - p.stationary_mean()) / (sd / (n as f64).sqrt())).abs());
    }
    Ok((
        worst < 4.0,
        format!("max |z| of stationary mean = {worst:.3}"),
    ))
}

fn closed_form_overlap(rng: &RandomStream) -> Outcome {
    let mut s = rng.clone();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (l1, l2) = (s.random_range(0.01..1.0), s.random_range(0.01..1.0));
        let series = overlap_statistic(
            &geometric_weights::<f64>(l1, 5_000)?,
            &geometric_weights::<f64>(l2, 5_000)?,
        )?;
        worst = worst.max((series.value - overlap_closed_form(l1, l2)?).abs());
    }
    Ok((
        worst < 1e-10,
        format!("max |series - closed form| = {worst:e} over 200 pairs"),
    ))
}

fn geometric_limit(n: usize, rng: &RandomStream) -> Outcome {
    let params = DiffusionParams::new(1.0, 1.0, 1.0)?;
    let target = 2.0 * std::f64::consts::LN_2 - 1.0;
    let series_err = (stationary_overlap_limit(&params) - target).abs();
    let e =
        estimate_overlap_curve(&ModelSpec::Geometric(params), 1.0, &[1e-6], n, rng)?.estimates[0];
    let z = e.z_score(target);
    Ok((
        series_err < 1e-12 && z.abs() < 4.0 && e.mean < 1.0 - 5.0 * e.std_error,
        format!(
            "E D(1e-6) = {:.6} (se {:.2e}), limit {target:.6}, z = {z:.3}",
            e.mean, e.std_error
        ),
    ))
}

fn changepoint_law(n: usize, rng: &RandomStream) -> Outcome {
    let rate = GapRate::new(1.0)?;
    let hs = [1.0, 0.1, 0.01, 0.001, 0.0];
    let curve = estimate_overlap_curve(&ModelSpec::Changepoint { rate }, 1.0, &hs, n, rng)?;
    let mut worst: f64 = 0.0;
    for e in &curve.estimates {
        worst = worst.max(e.z_score(same_component_prob(rate, e.h)?).abs());
    }
    let clean = curve.diagnostics == CurveDiagnostics::Changepoint { discrepancies: 0 };
    let last = curve.estimates[hs.len() - 1].mean;
    Ok((
        worst <= 4.0 && clean && last == 1.0,
        format!(
            "max |z| vs exp(-h) = {worst:.3}; generic/exact discrepancies: {:?}",
            curve.diagnostics
        ),
    ))
}

fn changepoint_pathwise(rng: &RandomStream) -> Outcome {
    let rate = GapRate::new(2.0)?;
    let mut s = rng.clone();
    for _ in 0..2_000 {
        let (t, h) = (s.random_range(0.01..3.0), s.random_range(0.0..1.0));
        let p = sample_partition(rate, t + h, &mut s)?;
        let gaps_ok = p.gaps().all(|g| g > 0.0) && p.taus().last().is_some_and(|l| *l >= t + h);
        let k = p.taus().len() + 1;
        let a = ctmix::changepoint::indicator_weights::<f64>(&p, t, k)?;
        let b = ctmix::changepoint::indicator_weights::<f64>(&p, t + h, k)?;
        let exact = f64::from(overlap_exact(&p, t, h)?);
        let sup = sup_weight_diff(&a.weights, &b.weights)?.value;
        if !gaps_ok
            || overlap_statistic(&a.weights, &b.weights)?.value != exact
            || sup != 1.0 - exact
        {
            return Ok((false, format!("mismatch at t = {t}, h = {h}")));
        }
    }
    Ok((
        true,
        "2000 partitions: valid gaps, overlap and sup difference agree with the exact indicator"
            .into(),
    ))
}

fn nrm_checks(n: usize, rng: &RandomStream) -> Outcome {
    let params = NrmParams::default();
    let curve =
        estimate_overlap_curve_nrm(&params, 10.0, &[1.0, 0.1, 0.01], n.clamp(100, 5_000), rng)?;
    let below = curve
        .estimates
        .iter()
        .all(|e| e.mean < 1.0 - 5.0 * e.std_error);
    let d = &curve.diagnostics;
    let ok = below && d.max_normalization_error <= 1e-12 && d.min_total_mass > 0.0;
    let means: Vec<String> = curve
        .estimates
        .iter()
        .map(|e| format!("{:.4}", e.mean))
        .collect();
    Ok((
        ok,
        format!(
            "E D(h) at h = 1, 0.1, 0.01: {}; max normalization error {:e}",
            means.join(", "),
            d.max_normalization_error
        ),
    ))
}

fn nrm_decay_invariance(rng: &RandomStream) -> Outcome {
    let params = NrmParams::default();
    let mut s = rng.clone();
    for _ in 0..50 {
        let sim = simulate_jumps(&params, (0.0, 5.0), &mut s)?;
        let frozen = JumpSet::new(sim.jumps().to_vec(), (sim.window().0, 10.0))?;
        if frozen.active_count(5.0) == 0 {
            continue;
        }
        let k = frozen.len();
        let now = nrm_weights::<f64>(&frozen, 5.0, params.decay, k)?;
        let later = nrm_weights::<f64>(&frozen, 9.0, params.decay, k)?;
        if now != later {
            return Ok((false, "weights changed without births".into()));
        }
    }
    Ok((
        true,
        "weights identical at t = 5 and t = 9 for 50 frozen jump sets".into(),
    ))
}

fn weight_invariants(rng: &RandomStream) -> Outcome {
    let mut s = rng.clone();
    for _ in 0..1_000 {
        let draw = |s: &mut RandomStream| {
            let raw: Vec<f64> = (0..8).map(|_| s.random::<f64>()).collect();
            let total: f64 = raw.iter().sum();
            WeightVector::complete(raw.iter().map(|x| x / total).collect())
        };
        let (a, b) = (draw(&mut s)?, draw(&mut s)?);
        let d = overlap_statistic(&a, &b)?.value;
        if !(0.0..=1.0).contains(&d) {
            return Ok((false, format!("overlap {d} outside [0, 1]")));
        }
    }
    let j = ComponentIndex::new(3).expect("positive");
    let pm = WeightVector::<f64>::point_mass(j, 5);
    let one = overlap_statistic(&pm, &pm)?.value;
    Ok((
        one == 1.0,
        "1000 random pairs in [0, 1]; point mass overlaps itself with 1".into(),
    ))
}

fn marginal_student_t() -> Outcome {
    let (mu, kappa, alpha, beta): (f64, f64, f64, f64) = (0.5, 2.0, 3.0, 1.5);
    let g0 = BaselineSpec::normal_inverse_gamma(mu, kappa, alpha, beta)?;
    let mut worst: f64 = 0.0;
    for y in [-3.0, -0.2, 0.5, 1.7, 6.0] {
        let nu = 2.0 * alpha;
        let scale2 = beta * (kappa + 1.0) / (alpha * kappa);
        let t = ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI * scale2).ln()
            - (nu + 1.0) / 2.0 * (1.0 + (y - mu) * (y - mu) / (nu * scale2)).ln();
        worst = worst.max((segment_marginal_likelihood(&[y], &g0, KernelSpec::Normal)? - t).abs());
    }
    Ok((
        worst < 1e-10,
        format!("max |closed form - Student t| = {worst:e}"),
    ))
}

fn prior_recovery(rng: &RandomStream) -> Outcome {
    let data = Dataset::new(vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 5.0, -2.0, 1.0])?;
    let rate = 1.5;
    let config = InferenceConfig {
        rate_prior: RatePrior::Fixed(rate),
        use_likelihood: false,
        n_iterations: 6_000,
        n_burnin: 1_000,
        ..Default::default()
    };
    let draws = run_sampler(&data, &config, &mut rng.clone())?;
    let counts: Vec<f64> = draws.draws.iter().map(|d| d.taus.len() as f64).collect();
    let (mean, _) = mean_sd(&counts);
    let se = batch_means_se(&counts, 50);
    let expected = rate * data.last_time();
    Ok((
        (mean - expected).abs() < 4.0 * se,
        format!("mean count {mean:.3} vs {expected} (batch se {se:.3})"),
    ))
}

fn dataset_roundtrip(rng: &RandomStream) -> Outcome {
    let mut s = rng.clone();
    let times: Vec<f64> = (1..=50)
        .map(|i| i as f64 * 0.1 + s.random::<f64>() * 1e-3)
        .collect();
    let values: Vec<f64> = (0..50).map(|_| s.random::<f64>() * 1e5 - 5e4).collect();
    let data = Dataset::new(times, values)?;
    let mut buf = Vec::new();
    data.write_csv(&mut buf, &["roundtrip".into()])
        .map_err(|e| ctmix::Error::Data(e.to_string()))?;
    let back = Dataset::read_csv(buf.as_slice())?;
    Ok((
        back == data,
        "50 rows written at 17 significant digits read back bit-exactly".into(),
    ))
}

fn convergent_grid() -> Outcome {
    let g = build_convergent_grid(1000)?;
    let ok = (g.last() - 1.64394).abs() < 1e-5 && g.times().windows(2).all(|w| w[0] < w[1]);
    Ok((ok, format!("t_1000 = {:.10}", g.last())))
}

pub fn run_checks(n: usize, rng: &RandomStream) -> Vec<Check> {
    let stream = |name: &str| rng.child(name);
    let checks: Vec<NamedCheck> = vec![
        ("jump_pmf_normalization", Box::new(jump_pmf_normalization)),
        (
            "jump_sample_chi_square",
            Box::new(|| jump_sample_chi_square(n, &stream("jump_sample"))),
        ),
        (
            "transition_stationarity",
            Box::new(|| transition_stationarity(n, &stream("stationarity"))),
        ),
        (
            "closed_form_overlap",
            Box::new(|| closed_form_overlap(&stream("closed_form"))),
        ),
        (
            "geometric_small_lag_limit",
            Box::new(|| geometric_limit(n, &stream("geometric_limit"))),
        ),
        (
            "changepoint_overlap_law",
            Box::new(|| changepoint_law(n, &stream("changepoint_law"))),
        ),
        (
            "changepoint_pathwise_identities",
            Box::new(|| changepoint_pathwise(&stream("changepoint_pathwise"))),
        ),
        (
            "nrm_normalization_and_deficiency",
            Box::new(|| nrm_checks(n, &stream("nrm"))),
        ),
        (
            "nrm_decay_invariance",
            Box::new(|| nrm_decay_invariance(&stream("nrm_frozen"))),
        ),
        (
            "weight_overlap_bounds",
            Box::new(|| weight_invariants(&stream("weights"))),
        ),
        ("marginal_student_t", Box::new(marginal_student_t)),
        (
            "sampler_prior_recovery",
            Box::new(|| prior_recovery(&stream("prior_recovery"))),
        ),
        (
            "dataset_roundtrip",
            Box::new(|| dataset_roundtrip(&stream("roundtrip"))),
        ),
        ("convergent_grid", Box::new(convergent_grid)),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok((passed, detail)) => Check {
                name,
                passed,
                detail,
            },
            Err(e) => Check {
                name,
                passed: false,
                detail: format!("error: {e}"),
            },
        })
        .collect()
}

pub fn run(config: &Config) -> CliResult<()> {
    let meta = Metadata::new(config)?;
    let n = config.at_least("n_reps", 100)?;
    let checks = run_checks(n, &RandomStream::new(meta.base_seed, 0));
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    let output = Output {
        meta: &meta,
        passed: failed.is_empty(),
        n_checks: checks.len(),
        n_failed: failed.len(),
        checks: &checks,
    };
    write_json(&out_path(config, "out")?, &output)?;
    for c in &checks {
        eprintln!(
            "[{}] {}: {}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(format!(
            "{} check(s) failed: {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}
