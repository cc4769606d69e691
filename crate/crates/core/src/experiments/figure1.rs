//! Component indices of the geometric model sampled along the convergent grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::build_convergent_grid;
use crate::error::{invalid, Result};
use crate::geometric::{sample_z_exact, simulate_path, DiffusionParams};
use crate::rng::RandomStream;

/// The `b` values swept with `a = c = 1`.
pub const FIGURE1_B_GRID: [f64; 4] = [1.0, 10.0, 30.0, 50.0];
pub const FIGURE1_L: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub l: usize,
    pub t: f64,
    pub lambda: f64,
    pub z: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure1Trace {
    pub params: DiffusionParams,
    pub points: Vec<TracePoint>,
}

impl Figure1Trace {
    pub fn mean_z(&self) -> f64 {
        self.points.iter().map(|p| p.z as f64).sum::<f64>() / self.points.len() as f64
    }

    /// Fraction of the last `last` steps where `z(t_l) ≠ z(t_{l+1})`.
    pub fn switching_frequency(&self, last: usize) -> f64 {
        let n = self.points.len();
        if n < 2 {
            return 0.0;
        }
        let tail = &self.points[n.saturating_sub(last + 1)..];
        let switches = tail.windows(2).filter(|w| w[0].z != w[1].z).count();
        switches as f64 / (tail.len() - 1) as f64
    }
}

/// One trace per `b`: a `λ` path on the grid and one `z ~ Geometric(λ_{t_l})` per point.
///
/// Trace `i` runs on `rng.replicate(i)`.
pub fn figure1_run(
    a: f64,
    c: f64,
    b_grid: &[f64],
    l: usize,
    rng: &RandomStream,
) -> Result<Vec<Figure1Trace>> {
    if b_grid.is_empty() {
        return Err(invalid("b_grid", "need at least one b"));
    }
    let grid = build_convergent_grid(l)?;
    let times = grid.time_points();
    let params = b_grid
        .iter()
        .map(|b| DiffusionParams::new(a, *b, c))
        .collect::<Result<Vec<_>>>()?;
    params
        .into_par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut stream = rng.replicate(i as u64);
            let path = simulate_path(&p, &times, &mut stream)?;
            let points = path
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    Ok(TracePoint {
                        l: k + 1,
                        t: s.t.get(),
                        lambda: s.lambda,
                        z: sample_z_exact(s.lambda, &mut stream)?.get(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Figure1Trace { params: p, points })
        })
        .collect()
}
