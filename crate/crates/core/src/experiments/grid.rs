use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::weights::TimePoint;

/// Times `t_l = t_{l−1} + 1/l²`, `l = 1..L`, from `t_0 = 0`; they approach `π²/6`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergentGrid {
    times: Vec<f64>,
}

impl ConvergentGrid {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> f64 {
        *self.times.last().expect("L >= 1")
    }

    pub fn time_points(&self) -> Vec<TimePoint> {
        self.times
            .iter()
            .map(|t| TimePoint::new(*t).expect("positive"))
            .collect()
    }
}

/// Partial sums of `1/l²` with Neumaier compensation.
pub fn build_convergent_grid(l: usize) -> Result<ConvergentGrid> {
    if l == 0 {
        return Err(invalid("L", "need at least one grid point"));
    }
    let mut times = Vec::with_capacity(l);
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 1..=l {
        let x = 1.0 / (i as f64 * i as f64);
        let t = sum + x;
        comp += if sum.abs() >= x {
            (sum - t) + x
        } else {
            (x - t) + sum
        };
        sum = t;
        times.push(sum + comp);
    }
    Ok(ConvergentGrid { times })
}
