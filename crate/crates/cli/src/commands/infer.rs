//! `infer`: posterior draws of the change-point model for a `t,y` CSV.

use std::io::Write;
use std::path::PathBuf;

use ctmix::changepoint::Dataset;
use ctmix::inference::{
    posterior_summary, run_chains, InferenceConfig, PosteriorSummary, RatePrior,
};
use ctmix::mixture::KernelSpec;
use ctmix::RandomStream;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::simulate::baseline;
use super::{create, io_err, out_path, write_json};
use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::meta::Metadata;

pub const KEYS: &[Key] = &[
    key("data", None, "input CSV with header t,y"),
    key("iterations", Some("20000"), "sweeps per chain"),
    key("burnin", Some("5000"), "discarded leading sweeps"),
    key("chains", Some("1"), "independent chains"),
    key("moves", Some("5"), "change-point moves per sweep"),
    key(
        "proposal_scale",
        Some("0.5"),
        "half-width of the shift proposal",
    ),
    key("rate_shape", Some("1"), "gamma prior shape of the gap rate"),
    key("rate_rate", Some("1"), "gamma prior rate of the gap rate"),
    key("fixed_rate", None, "hold the gap rate fixed instead"),
    key("mu0", Some("0"), "baseline mean"),
    key("kappa0", Some("0.01"), "baseline mean precision scale"),
    key("alpha0", Some("2"), "baseline inverse-gamma shape"),
    key("beta0", Some("1"), "baseline inverse-gamma scale"),
    key(
        "grid_cells",
        Some("50"),
        "cells of the change-probability grid",
    ),
    key(
        "out_dir",
        Some("."),
        "directory for draws.jsonl and summary.json",
    ),
];

#[derive(Serialize)]
struct DrawRecord<'a> {
    chain: usize,
    iteration: usize,
    tau: &'a [f64],
    lambda: f64,
    log_posterior: f64,
}

#[derive(Serialize)]
struct MetaRecord<'a> {
    meta: &'a Metadata,
    data_sha256: &'a str,
    n_obs: usize,
}

#[derive(Serialize)]
struct SummaryOutput<'a> {
    meta: &'a Metadata,
    data_sha256: &'a str,
    #[serde(flatten)]
    summary: &'a PosteriorSummary,
}

pub fn run(config: &Config) -> CliResult<()> {
    let meta = Metadata::new(config)?;
    let data_path = PathBuf::from(config.str("data")?);
    let bytes = std::fs::read(&data_path)
        .map_err(|e| CliError::Data(format!("{}: {e}", data_path.display())))?;
    let data = Dataset::read_csv(bytes.as_slice())
        .map_err(|e| CliError::Data(format!("{}: {e}", data_path.display())))?;
    if data.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 observations, got {}",
            data_path.display(),
            data.len()
        )));
    }
    let digest = hex::encode(Sha256::digest(&bytes));

    let rate_prior = match config.opt::<f64>("fixed_rate")? {
        Some(_) => RatePrior::Fixed(config.positive("fixed_rate")?),
        None => RatePrior::Gamma {
            shape: config.positive("rate_shape")?,
            rate: config.positive("rate_rate")?,
        },
    };
    let inference = InferenceConfig {
        rate_prior,
        baseline: baseline(config)?,
        kernel: KernelSpec::Normal,
        n_iterations: config.at_least("iterations", 1)?,
        n_burnin: config.get("burnin")?,
        proposal_scale: config.positive("proposal_scale")?,
        moves_per_iteration: config.at_least("moves", 1)?,
        use_likelihood: true,
    };
    config.check("burnin", inference.validate())?;
    let chains = run_chains(
        &data,
        &inference,
        config.at_least("chains", 1)?,
        &RandomStream::new(meta.base_seed, 0),
    )?;

    let dir = out_path(config, "out_dir")?;
    let path = dir.join("draws.jsonl");
    let mut w = create(&path)?;
    let err = io_err(&path);
    writeln!(
        w,
        "{}",
        json(&MetaRecord {
            meta: &meta,
            data_sha256: &digest,
            n_obs: data.len()
        })
    )
    .map_err(&err)?;
    for (c, chain) in chains.iter().enumerate() {
        for d in &chain.draws {
            let rec = DrawRecord {
                chain: c,
                iteration: d.iteration,
                tau: &d.taus,
                lambda: d.lambda,
                log_posterior: d.log_posterior,
            };
            writeln!(w, "{}", json(&rec)).map_err(&err)?;
        }
    }
    w.flush().map_err(&err)?;

    let window = data.last_time();
    let cells = config.at_least("grid_cells", 1)?;
    let grid: Vec<f64> = (0..=cells)
        .map(|i| window * i as f64 / cells as f64)
        .collect();
    let summary = posterior_summary(&chains, &grid)?;
    write_json(
        &dir.join("summary.json"),
        &SummaryOutput {
            meta: &meta,
            data_sha256: &digest,
            summary: &summary,
        },
    )
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain records serialize")
}
