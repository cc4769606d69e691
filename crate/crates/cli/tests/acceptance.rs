//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any failure.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use ctmix::changepoint::{generate_data, Dataset, GapRate, Partition};
use ctmix::experiments::{
    build_convergent_grid, estimate_overlap_curve, figure1_run, CurveDiagnostics, ModelSpec,
    FIGURE1_B_GRID,
};
use ctmix::geometric::{
    geometric_weights, jump_pmf, jump_sample, overlap_closed_form, stationary_sample,
    transition_sample, DiffusionParams,
};
use ctmix::inference::{
    posterior_summary, run_chains, run_sampler, segment_marginal_likelihood, InferenceConfig,
    PosteriorDraws, RatePrior,
};
use ctmix::mixture::{AtomStore, BaselineSpec, KernelSpec, NormalAtom};
use ctmix::nrm::{
    estimate_overlap_curve_nrm, nrm_weights, simulate_jumps, JumpSet, LevySpec, NrmParams,
};
use ctmix::stats::{batch_means_se, mean_sd};
use ctmix::weights::overlap_statistic;
use ctmix::{RandomStream, TimePoint};
use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

const SEED: u64 = 20_240_601;

/// Change-point E{D(h)} within 4 binomial SE of e^{−h}, n = 10⁵.
fn criterion_1() -> Outcome {
    let model = ModelSpec::Changepoint {
        rate: GapRate::new(1.0).map_err(err)?,
    };
    let hs = [1.0, 0.1, 0.01, 0.001];
    let curve = estimate_overlap_curve(&model, 1.0, &hs, 100_000, &RandomStream::new(SEED, 1))
        .map_err(err)?;
    let mut parts = Vec::new();
    for e in &curve.estimates {
        let p = (-e.h).exp();
        let se = (p * (1.0 - p) / e.n_reps as f64).sqrt();
        let z = (e.mean - p) / se;
        ensure(z.abs() <= 4.0, || {
            format!("h={}: mean {:.6} vs {p:.6}, z={z:.2}", e.h, e.mean)
        })?;
        parts.push(format!("h={}: {:.6} (z={z:+.2})", e.h, e.mean));
    }
    Ok(parts.join("; "))
}

/// Convergence to 1 and generic-vs-exact overlap agreement on 10⁵ replicates.
fn criterion_2() -> Outcome {
    let model = ModelSpec::Changepoint {
        rate: GapRate::new(1.0).map_err(err)?,
    };
    let curve = estimate_overlap_curve(&model, 1.0, &[0.001], 100_000, &RandomStream::new(SEED, 2))
        .map_err(err)?;
    let mean = curve.estimates[0].mean;
    ensure(mean > 0.998, || format!("E D(0.001) = {mean}"))?;
    let CurveDiagnostics::Changepoint { discrepancies } = curve.diagnostics else {
        return Err("missing change-point diagnostics".into());
    };
    ensure(discrepancies == 0, || {
        format!("{discrepancies} discrepancies")
    })?;
    Ok(format!(
        "E D(0.001) = {mean:.6} > 0.998; 0 discrepancies in 100000 replicates"
    ))
}

/// Geometric per-draw overlap and its small-lag limit 2 ln 2 − 1 < 1.
fn criterion_3() -> Outcome {
    let mut rng = RandomStream::new(SEED, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (l1, l2) = (rng.random_range(0.01..1.0), rng.random_range(0.01..1.0));
        let w1 = geometric_weights::<f64>(l1, 5_000).map_err(err)?;
        let w2 = geometric_weights::<f64>(l2, 5_000).map_err(err)?;
        let series = overlap_statistic(&w1, &w2).map_err(err)?.value;
        worst = worst.max((series - overlap_closed_form(l1, l2).map_err(err)?).abs());
    }
    ensure(worst < 1e-10, || {
        format!("series vs closed form differ by {worst:e}")
    })?;
    // E{λ/(2−λ)} under Beta(1,1) by quadrature
    let oracle = simpson(|l| l / (2.0 - l), 0.0, 1.0, 10_000);
    let params = DiffusionParams::new(1.0, 1.0, 1.0).map_err(err)?;
    let e = estimate_overlap_curve(
        &ModelSpec::Geometric(params),
        1.0,
        &[1e-6],
        100_000,
        &RandomStream::new(SEED, 4),
    )
    .map_err(err)?
    .estimates[0];
    let z = e.z_score(oracle);
    ensure(z.abs() <= 4.0, || {
        format!("E D(1e-6) = {} vs {oracle}, z = {z:.2}", e.mean)
    })?;
    ensure(e.mean < 1.0 - 5.0 * e.std_error, || "not below one".into())?;
    Ok(format!(
        "series/closed-form max diff {worst:.1e}; E D(1e-6) = {:.6} vs {oracle:.6} (z={z:+.2})",
        e.mean
    ))
}

fn chi_square_p(
    params: &DiffusionParams,
    h: f64,
    n: usize,
    rng: &mut RandomStream,
) -> Result<f64, String> {
    let mut counts: Vec<u64> = Vec::new();
    for _ in 0..n {
        let m = jump_sample(params, h, rng).map_err(err)? as usize;
        if m >= counts.len() {
            counts.resize(m + 1, 0);
        }
        counts[m] += 1;
    }
    let (mut chi2, mut bins) = (0.0, 0usize);
    let (mut rest_e, mut rest_o) = (n as f64, n as u64);
    for m in 0..counts.len().max(20_000) {
        let e = n as f64 * jump_pmf(params, h, m as u64).map_err(err)?;
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
    ensure(bins >= 3, || format!("only {bins} chi-square bins"))?;
    Ok(1.0 - ChiSquared::new((bins - 1) as f64).map_err(err)?.cdf(chi2))
}

/// Wright–Fisher transition: pmf normalization, sampler vs pmf, stationarity.
fn criterion_4() -> Outcome {
    let sets = [
        (1.0, 1.0, 1.0, 0.5),
        (2.0, 3.0, 1.0, 0.1),
        (1.0, 10.0, 0.5, 0.2),
    ];
    let mut min_p: f64 = 1.0;
    let mut worst_sum: f64 = 0.0;
    for (i, (a, b, c, h)) in sets.into_iter().enumerate() {
        let p = DiffusionParams::new(a, b, c).map_err(err)?;
        let x: f64 = (-c * h).exp();
        let mean = (a + b) * x / (1.0 - x);
        let (mut total, mut m) = (0.0, 0u64);
        loop {
            let q = jump_pmf(&p, h, m).map_err(err)?;
            total += q;
            if m as f64 > mean && q < 1e-18 {
                break;
            }
            m += 1;
        }
        worst_sum = worst_sum.max((total - 1.0).abs());
        min_p = min_p.min(chi_square_p(
            &p,
            h,
            100_000,
            &mut RandomStream::new(SEED, 40 + i as u64),
        )?);
    }
    ensure(worst_sum < 1e-10, || {
        format!("pmf sums off by {worst_sum:e}")
    })?;
    ensure(min_p > 0.001, || format!("chi-square p = {min_p}"))?;

    let n = 100_000;
    let mut worst_z: f64 = 0.0;
    for (ai, (a, b)) in [(1.0, 1.0), (1.0, 10.0), (2.0, 3.0)]
        .into_iter()
        .enumerate()
    {
        let p = DiffusionParams::new(a, b, 1.0).map_err(err)?;
        for (hi, h) in [0.01, 0.1, 1.0].into_iter().enumerate() {
            let mut rng = RandomStream::new(SEED, 400 + (10 * ai + hi) as u64);
            let mut xs = Vec::with_capacity(n);
            for _ in 0..n {
                let s = stationary_sample(&p, &mut rng);
                xs.push(transition_sample(&p, &s, h, &mut rng).map_err(err)?.lambda);
            }
            let (m, sd) = mean_sd(&xs);
            let var = sd * sd;
            let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n as f64;
            let z_mean = (m - p.stationary_mean()) / (sd / (n as f64).sqrt());
            let z_var = (var - p.stationary_variance()) / ((m4 - var * var) / n as f64).sqrt();
            worst_z = worst_z.max(z_mean.abs()).max(z_var.abs());
        }
    }
    ensure(worst_z <= 4.0, || {
        format!("stationarity |z| = {worst_z:.2}")
    })?;
    Ok(format!(
        "pmf sum error {worst_sum:.1e}; min chi-square p {min_p:.4}; stationarity max |z| {worst_z:.2} over 9 cells"
    ))
}

/// NRM: E{D(h)} below 1 by ≥ 5 SE, exact normalization, frozen-set invariance.
fn criterion_5() -> Outcome {
    let params = NrmParams::new(1.0, LevySpec::gamma(1.0, 1e-4).map_err(err)?).map_err(err)?;
    let curve = estimate_overlap_curve_nrm(
        &params,
        10.0,
        &[1.0, 0.1, 0.01],
        10_000,
        &RandomStream::new(SEED, 5),
    )
    .map_err(err)?;
    let mut parts = Vec::new();
    for e in &curve.estimates {
        let gap = (1.0 - e.mean) / e.std_error;
        ensure(gap >= 5.0, || {
            format!("h={}: only {gap:.1} SE below 1", e.h)
        })?;
        parts.push(format!("h={}: {:.4}", e.h, e.mean));
    }
    let norm = curve.diagnostics.max_normalization_error;
    ensure(norm <= 1e-12, || format!("normalization error {norm:e}"))?;
    let mut rng = RandomStream::new(SEED, 50);
    let mut frozen_checked = 0;
    for _ in 0..100 {
        let sim = simulate_jumps(&params, (0.0, 5.0), &mut rng).map_err(err)?;
        let frozen = JumpSet::new(sim.jumps().to_vec(), (sim.window().0, 20.0)).map_err(err)?;
        if frozen.active_count(5.0) == 0 {
            continue;
        }
        let k = frozen.len();
        let now = nrm_weights::<f64>(&frozen, 5.0, params.decay, k).map_err(err)?;
        for h in [0.1, 1.0, 10.0] {
            let later = nrm_weights::<f64>(&frozen, 5.0 + h, params.decay, k).map_err(err)?;
            ensure(now == later, || {
                format!("frozen weights changed at h = {h}")
            })?;
        }
        frozen_checked += 1;
    }
    Ok(format!(
        "{}; max normalization error {norm:.1e}; {frozen_checked} frozen sets invariant",
        parts.join(", ")
    ))
}

/// Grid endpoint 1.6439 and persistent switching of z along the grid.
fn criterion_6() -> Outcome {
    let grid = build_convergent_grid(1000).map_err(err)?;
    let shown = format!("{:.4}", grid.last());
    ensure(shown == "1.6439", || format!("t_1000 = {}", grid.last()))?;
    let root = RandomStream::new(SEED, 6);
    let runs = (0..100u64)
        .map(|i| figure1_run(1.0, 1.0, &FIGURE1_B_GRID, 1000, &root.replicate(i)))
        .collect::<ctmix::Result<Vec<_>>>()
        .map_err(err)?;
    let mut parts = Vec::new();
    for (k, b) in FIGURE1_B_GRID.iter().enumerate() {
        let freq = runs
            .iter()
            .map(|r| r[k].switching_frequency(100))
            .sum::<f64>()
            / runs.len() as f64;
        ensure(freq > 0.0, || format!("b={b}: z stopped switching"))?;
        if k == 0 {
            ensure(freq > 0.05, || format!("b=1 switching frequency {freq}"))?;
        }
        parts.push(format!("b={b}: {freq:.3}"));
    }
    Ok(format!(
        "t_1000 = {shown}; late switching frequency {}",
        parts.join(", ")
    ))
}

fn one_change_point_data() -> Result<Dataset, String> {
    let partition = Partition::from_taus(vec![5.0, 20.0], 20.0).map_err(err)?;
    let atoms = vec![
        NormalAtom::new(0.0, 0.25).map_err(err)?,
        NormalAtom::new(3.0, 0.25).map_err(err)?,
    ];
    let mut store = AtomStore::with_atoms(BaselineSpec::default(), atoms);
    let times: Vec<TimePoint> = (1..=100)
        .map(|i| TimePoint::new(i as f64 / 10.0))
        .collect::<ctmix::Result<_>>()
        .map_err(err)?;
    generate_data(
        &partition,
        &mut store,
        KernelSpec::Normal,
        &times,
        &mut RandomStream::new(SEED, 70),
    )
    .map_err(err)
}

fn segmentation_frequencies(draws: &PosteriorDraws) -> [f64; 4] {
    let mut f = [0.0; 4];
    for d in &draws.draws {
        let g1 = d.taus.iter().any(|t| *t > 1.0 && *t < 2.0);
        let g2 = d.taus.iter().any(|t| *t > 2.0 && *t < 3.0);
        f[usize::from(g1) + 2 * usize::from(g2)] += 1.0;
    }
    f.map(|x| x / draws.draws.len() as f64)
}

/// Change-point recovery, prior recovery, brute-force posterior on 3 points.
fn criterion_7() -> Outcome {
    let data = one_change_point_data()?;
    let chains = run_chains(
        &data,
        &InferenceConfig::default(),
        2,
        &RandomStream::new(SEED, 71),
    )
    .map_err(err)?;
    let summary = posterior_summary(&chains, &[0.0, 10.0]).map_err(err)?;
    let median = summary.taus.ok_or("no change points sampled")?.median;
    ensure((median - 5.0).abs() <= 0.5, || {
        format!("median change point {median}")
    })?;
    ensure(summary.count_mode == 1, || {
        format!("count mode {}", summary.count_mode)
    })?;

    let prior_data = Dataset::new(
        vec![1.0, 2.0, 3.0, 4.0, 5.0],
        vec![0.0, 9.0, -3.0, 4.0, 1.0],
    )
    .map_err(err)?;
    let rate = 1.3;
    let config = InferenceConfig {
        rate_prior: RatePrior::Fixed(rate),
        use_likelihood: false,
        n_iterations: 12_000,
        n_burnin: 2_000,
        ..Default::default()
    };
    let prior = run_sampler(&prior_data, &config, &mut RandomStream::new(SEED, 72)).map_err(err)?;
    let counts: Vec<f64> = prior.draws.iter().map(|d| d.taus.len() as f64).collect();
    let (mean, _) = mean_sd(&counts);
    let se = batch_means_se(&counts, 50);
    let expected = rate * prior_data.last_time();
    ensure((mean - expected).abs() <= 4.0 * se, || {
        format!("prior count {mean} vs {expected} (se {se})")
    })?;

    // Exhaustive posterior over the four segmentations of t = 1, 2, 3.
    let small = Dataset::new(vec![1.0, 2.0, 3.0], vec![0.2, 1.4, -0.9]).map_err(err)?;
    let lambda = 0.8;
    let y = small.values();
    let ev =
        |xs: &[f64]| segment_marginal_likelihood(xs, &BaselineSpec::default(), KernelSpec::Normal);
    let p_gap = 1.0 - (-lambda * 1.0f64).exp();
    let mut exact = [0.0; 4];
    for (i, slot) in exact.iter_mut().enumerate() {
        let (g1, g2) = (i % 2 == 1, i >= 2);
        let cuts: Vec<usize> = [(g1, 1), (g2, 2)]
            .iter()
            .filter(|(g, _)| *g)
            .map(|(_, c)| *c)
            .collect();
        let mut bounds = vec![0];
        bounds.extend(cuts);
        bounds.push(3);
        let ln_ev: f64 = bounds
            .windows(2)
            .map(|w| ev(&y[w[0]..w[1]]))
            .sum::<ctmix::Result<f64>>()
            .map_err(err)?;
        let prior = (if g1 { p_gap } else { 1.0 - p_gap }) * (if g2 { p_gap } else { 1.0 - p_gap });
        *slot = prior * ln_ev.exp();
    }
    let z: f64 = exact.iter().sum();
    let exact = exact.map(|x| x / z);
    let config = InferenceConfig {
        rate_prior: RatePrior::Fixed(lambda),
        n_iterations: 110_000,
        n_burnin: 10_000,
        ..Default::default()
    };
    let draws = run_sampler(&small, &config, &mut RandomStream::new(SEED, 73)).map_err(err)?;
    let freq = segmentation_frequencies(&draws);
    let tv = 0.5
        * exact
            .iter()
            .zip(&freq)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    ensure(tv < 0.02, || format!("total variation {tv}"))?;
    Ok(format!(
        "median change point {median:.3}, count mode 1; prior count {mean:.3} vs {expected} (se {se:.3}); brute-force TV {tv:.4}"
    ))
}

fn run_cli(dir: &Path, args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_ctmix"))
        .current_dir(dir)
        .args(args)
        .env("CTMIX_THREADS", threads)
        .stderr(std::process::Stdio::null())
        .status()
        .map_err(err)?;
    ensure(status.success(), || {
        format!("`ctmix {}` exited with {status}", args.join(" "))
    })?;
    let out = args
        .iter()
        .find_map(|a| a.strip_prefix("out="))
        .ok_or("no out= argument")?;
    std::fs::read(dir.join(out)).map_err(err)
}

/// `validate` and `dichotomy` outputs are byte-identical across runs and thread counts.
fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut parts = Vec::new();
    for (name, args) in [
        ("validate", vec!["validate", "out=validate.json"]),
        (
            "dichotomy",
            vec!["dichotomy", "n_reps=20000", "out=dichotomy.json"],
        ),
    ] {
        let first = run_cli(dir.path(), &args, "1")?;
        let again = run_cli(dir.path(), &args, "1")?;
        let four = run_cli(dir.path(), &args, "4")?;
        ensure(first == again, || format!("{name}: two runs differ"))?;
        ensure(first == four, || format!("{name}: threads 1 and 4 differ"))?;
        parts.push(format!("{name}: {} bytes identical x3", first.len()));
    }
    Ok(parts.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("change-point overlap law e^{-h}", criterion_1),
        (
            "change-point convergence and generic/exact equivalence",
            criterion_2,
        ),
        ("geometric closed form and limit 2ln2-1", criterion_3),
        ("Wright-Fisher transition correctness", criterion_4),
        ("NRM overlap deficiency", criterion_5),
        ("Figure 1 grid and non-convergence", criterion_6),
        ("inference recovery", criterion_7),
        ("determinism across runs and threads", criterion_8),
    ];
    let mut failed = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {}: {title}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] criterion {}: {title}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
