pub mod dichotomy;
pub mod figure1;
pub mod infer;
pub mod simulate;
pub mod validate;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{key, Config, Key};
use crate::error::{CliError, CliResult};

pub const MODEL_KEYS: &[Key] = &[
    key("rate", None, "change-point gap rate"),
    key("a", None, "geometric: Beta shape a"),
    key("b", None, "geometric: Beta shape b"),
    key("c", None, "geometric: mixing rate c"),
    key("decay", None, "nrm: decay rate"),
    key("mass", Some("1"), "nrm: gamma Levy mass M"),
    key("floor", Some("1e-4"), "nrm: jump size floor"),
    key("tol_rel", Some("1e-10"), "nrm: relative lookback tolerance"),
];

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn out_path(config: &Config, key: &str) -> CliResult<PathBuf> {
    Ok(PathBuf::from(config.str(key)?))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Runtime(e.to_string()))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(path, e))
}

pub fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::io(path, e)
}

pub fn diffusion_params(config: &Config) -> CliResult<ctmix::geometric::DiffusionParams> {
    let (a, b, c) = (
        config.positive("a")?,
        config.positive("b")?,
        config.positive("c")?,
    );
    config.check("a", ctmix::geometric::DiffusionParams::new(a, b, c))
}

pub fn nrm_params(config: &Config) -> CliResult<ctmix::nrm::NrmParams> {
    let levy = config.check(
        "mass",
        ctmix::nrm::LevySpec::gamma(config.positive("mass")?, config.positive("floor")?),
    )?;
    let p = config.check(
        "decay",
        ctmix::nrm::NrmParams::new(config.positive("decay")?, levy),
    )?;
    config.check("tol_rel", p.with_tolerance(config.positive("tol_rel")?))
}

pub fn gap_rate(config: &Config) -> CliResult<ctmix::changepoint::GapRate> {
    config.check(
        "rate",
        ctmix::changepoint::GapRate::new(config.positive("rate")?),
    )
}
