//! `figure1`: sampled component indices along the convergent time grid.

use std::io::Write;

use ctmix::changepoint::fmt_g17;
use ctmix::experiments::figure1_run;
use ctmix::RandomStream;

use super::{create, io_err, out_path};
use crate::config::{key, Config, Key};
use crate::error::CliResult;
use crate::meta::Metadata;

pub const KEYS: &[Key] = &[
    key("a", Some("1"), "Beta shape a"),
    key("c", Some("1"), "mixing rate c"),
    key("b_grid", Some("1,10,30,50"), "comma-separated values of b"),
    key("L", Some("1000"), "grid points t_l = t_{l-1} + 1/l^2"),
    key("out", Some("figure1.csv"), "output CSV"),
];

pub fn run(config: &Config) -> CliResult<()> {
    let meta = Metadata::new(config)?;
    let a = config.positive("a")?;
    let c = config.positive("c")?;
    let b_grid = config.list("b_grid")?;
    let l = config.at_least("L", 1)?;
    let traces = config.check(
        "b_grid",
        figure1_run(a, c, &b_grid, l, &RandomStream::new(meta.base_seed, 0)),
    )?;

    let path = out_path(config, "out")?;
    let mut w = create(&path)?;
    let err = io_err(&path);
    for line in meta.comment_lines() {
        writeln!(w, "# {line}").map_err(&err)?;
    }
    writeln!(w, "b,l,t,z,log_z").map_err(&err)?;
    for (b, trace) in b_grid.iter().zip(&traces) {
        for p in &trace.points {
            writeln!(
                w,
                "{},{},{},{},{}",
                fmt_g17(*b),
                p.l,
                fmt_g17(p.t),
                p.z,
                fmt_g17((p.z as f64).ln())
            )
            .map_err(&err)?;
        }
    }
    w.flush().map_err(&err)
}
