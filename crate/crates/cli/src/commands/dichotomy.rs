//! `dichotomy`: `E{D(h)}` of every model on a shrinking lag grid.

use ctmix::experiments::{dichotomy_report, ExperimentReport, ModelSpec};
use ctmix::RandomStream;
use serde::Serialize;

use super::{diffusion_params, gap_rate, nrm_params, out_path, write_json};
use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};
use crate::meta::Metadata;

pub const KEYS: &[Key] = &[
    key(
        "models",
        Some("changepoint,geometric,nrm"),
        "models to compare",
    ),
    key(
        "h_grid",
        Some("1,0.1,0.01,0.001"),
        "strictly decreasing lags",
    ),
    key("t", Some("10"), "reference time"),
    key("n_reps", Some("100000"), "Monte Carlo replicates per model"),
    key("rate", Some("1"), "change-point gap rate"),
    key("a", Some("1"), "geometric: Beta shape a"),
    key("b", Some("1"), "geometric: Beta shape b"),
    key("c", Some("1"), "geometric: mixing rate c"),
    key("decay", Some("1"), "nrm: decay rate"),
    key("mass", Some("1"), "nrm: gamma Levy mass M"),
    key("floor", Some("1e-4"), "nrm: jump size floor"),
    key("tol_rel", Some("1e-10"), "nrm: relative lookback tolerance"),
    key("out", Some("dichotomy.json"), "output JSON"),
];

#[derive(Serialize)]
struct Output<'a> {
    meta: &'a Metadata,
    #[serde(flatten)]
    report: &'a ExperimentReport,
}

pub fn run(config: &Config) -> CliResult<()> {
    let meta = Metadata::new(config)?;
    let mut models = Vec::new();
    for name in config.str("models")?.split(',').map(str::trim) {
        models.push(match name {
            "changepoint" => ModelSpec::Changepoint {
                rate: gap_rate(config)?,
            },
            "geometric" => ModelSpec::Geometric(diffusion_params(config)?),
            "nrm" => ModelSpec::Nrm(nrm_params(config)?),
            other => {
                return Err(CliError::Config(format!(
                    "field `models`: unknown model `{other}` (expected changepoint, geometric, nrm)"
                )))
            }
        });
    }
    let h_grid = config.list("h_grid")?;
    let t = config.positive("t")?;
    let n_reps = config.at_least("n_reps", 1)?;
    let report = config.check(
        "h_grid",
        dichotomy_report(
            &h_grid,
            &models,
            t,
            n_reps,
            &RandomStream::new(meta.base_seed, 0),
        ),
    )?;
    write_json(
        &out_path(config, "out")?,
        &Output {
            meta: &meta,
            report: &report,
        },
    )?;
    if report.all_pass() {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .verdicts
            .iter()
            .filter(|v| !v.pass_flag)
            .map(|v| format!("{} ({:?})", v.model, v.status))
            .collect();
        Err(CliError::Property(format!(
            "dichotomy flags not met: {}",
            failed.join(", ")
        )))
    }
}
