//! `simulate`: weight traces for one model, plus data for the change-point model.

use std::io::Write;
use std::path::Path;

use ctmix::changepoint::{fmt_g17, generate_data, indicator_weights, sample_partition};
use ctmix::geometric::{geometric_weights, simulate_path};
use ctmix::mixture::{AtomStore, BaselineSpec, KernelSpec};
use ctmix::nrm::{nrm_weights, simulate_jumps};
use ctmix::{RandomStream, TimePoint, WeightVector};

use super::{create, diffusion_params, gap_rate, io_err, nrm_params, out_path};
use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::meta::Metadata;

pub const KEYS: &[Key] = &[
    key("model", None, "geometric | nrm | changepoint"),
    key("horizon", Some("10"), "simulate on (0, horizon]"),
    key("n_times", Some("100"), "evenly spaced evaluation times"),
    key("K", Some("20"), "materialized weights per time"),
    key("mu0", Some("0"), "baseline mean"),
    key("kappa0", Some("0.01"), "baseline mean precision scale"),
    key("alpha0", Some("2"), "baseline inverse-gamma shape"),
    key("beta0", Some("1"), "baseline inverse-gamma scale"),
    key(
        "out_dir",
        Some("."),
        "directory for weights.csv (and data.csv)",
    ),
];

pub fn baseline(config: &Config) -> CliResult<BaselineSpec> {
    config.check(
        "kappa0",
        BaselineSpec::normal_inverse_gamma(
            config.get("mu0")?,
            config.positive("kappa0")?,
            config.positive("alpha0")?,
            config.positive("beta0")?,
        ),
    )
}

fn write_rows<W: Write>(
    w: &mut W,
    t: f64,
    labels: impl Iterator<Item = u64>,
    weights: &WeightVector<f64>,
) -> std::io::Result<()> {
    let tail = fmt_g17(weights.tail_mass());
    for (j, wj) in labels.zip(weights.weights()) {
        writeln!(w, "{},{j},{},{tail}", fmt_g17(t), fmt_g17(*wj))?;
    }
    Ok(())
}

pub fn run(config: &Config) -> CliResult<()> {
    let meta = Metadata::new(config)?;
    let model = config.str("model")?.to_string();
    let horizon = config.positive("horizon")?;
    let n_times = config.at_least("n_times", 1)?;
    let k = config.at_least("K", 1)?;
    let dir = out_path(config, "out_dir")?;
    let times: Vec<f64> = (1..=n_times)
        .map(|i| horizon * i as f64 / n_times as f64)
        .collect();
    let grid: Vec<TimePoint> = times
        .iter()
        .map(|t| TimePoint::new(*t))
        .collect::<ctmix::Result<_>>()?;
    let mut rng = RandomStream::new(meta.base_seed, 0);

    let path = dir.join("weights.csv");
    let mut w = create(&path)?;
    let err = io_err(&path);
    for c in meta.comment_lines() {
        writeln!(w, "# {c}").map_err(&err)?;
    }
    writeln!(w, "# model={model}").map_err(&err)?;
    writeln!(w, "t,j,w_j,tail").map_err(&err)?;
    match model.as_str() {
        "geometric" => {
            let params = diffusion_params(config)?;
            for s in simulate_path(&params, &grid, &mut rng)? {
                let wv = geometric_weights::<f64>(s.lambda, k)?;
                write_rows(&mut w, s.t.get(), 1..=k as u64, &wv).map_err(&err)?;
            }
        }
        "nrm" => {
            let params = nrm_params(config)?;
            let jumps = simulate_jumps(&params, (0.0, horizon), &mut rng)?;
            for t in &times {
                let nw = nrm_weights::<f64>(&jumps, *t, params.decay, k)?;
                write_rows(
                    &mut w,
                    *t,
                    nw.labels.iter().map(|l| *l as u64 + 1),
                    &nw.weights,
                )
                .map_err(&err)?;
            }
        }
        "changepoint" => {
            let rate = gap_rate(config)?;
            let g0 = baseline(config)?;
            let partition = sample_partition(rate, horizon, &mut rng)?;
            for t in &times {
                let iw = indicator_weights::<f64>(&partition, *t, k)?;
                write_rows(&mut w, *t, 1..=k as u64, &iw.weights).map_err(&err)?;
            }
            let mut atoms = AtomStore::new(g0);
            let data = generate_data(&partition, &mut atoms, KernelSpec::Normal, &grid, &mut rng)?;
            write_data(&dir.join("data.csv"), &data, &meta, &partition)?;
        }
        other => {
            return Err(CliError::Config(format!(
                "field `model`: expected geometric, nrm or changepoint, got `{other}`"
            )))
        }
    }
    w.flush().map_err(&err)
}

fn write_data(
    path: &Path,
    data: &ctmix::changepoint::Dataset,
    meta: &Metadata,
    partition: &ctmix::changepoint::Partition,
) -> CliResult<()> {
    let mut comments = meta.comment_lines();
    let taus: Vec<String> = partition.taus().iter().map(|t| fmt_g17(*t)).collect();
    comments.push(format!("change_points={}", taus.join(";")));
    let w = create(path)?;
    data.write_csv(w, &comments).map_err(io_err(path))
}
