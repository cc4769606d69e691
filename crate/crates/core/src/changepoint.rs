//! Indicator weights on a random partition of `(0, ∞)` with exponential gaps.
//!
//! `τ_0 = 0`, `τ_j = τ_{j−1} + ε_j` with `ε_j ~ Exp(rate)` i.i.d., and
//! component `j` owns the half-open interval `A_j = (τ_{j−1}, τ_j]`. Two times
//! share a component iff no change point falls in `(t, t+h]`, which by
//! memorylessness has probability `e^{−rate·h}` for every `t`.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, require_positive, Error, Result};
use crate::mixture::{AtomStore, KernelSpec};
use crate::scalar::Scalar;
use crate::weights::{ComponentIndex, TimePoint, WeightVector};

/// Rate of the exponential gap law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRate(f64);

impl GapRate {
    pub fn new(rate: f64) -> Result<Self> {
        require_positive("rate", rate)?;
        Ok(Self(rate))
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn sample_gap<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        loop {
            let e = Exp::new(self.0).expect("validated rate").sample(rng);
            if e > 0.0 {
                return e;
            }
        }
    }
}

/// Change points `τ_1 < τ_2 < …` materialized at least up to `horizon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    taus: Vec<f64>,
    horizon: f64,
}

impl Partition {
    /// Validates strict increase from `τ_0 = 0` and coverage of the horizon.
    pub fn from_taus(taus: Vec<f64>, horizon: f64) -> Result<Self> {
        require_positive("horizon", horizon)?;
        let mut prev = 0.0;
        for (i, &tau) in taus.iter().enumerate() {
            if !(tau > prev) || !tau.is_finite() {
                return Err(invalid(
                    "taus",
                    format!("τ_{} = {tau} does not exceed {prev}", i + 1),
                ));
            }
            prev = tau;
        }
        if !(prev >= horizon) {
            return Err(invalid(
                "horizon",
                format!("last change point {prev} does not cover {horizon}"),
            ));
        }
        Ok(Self { taus, horizon })
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Gaps `ε_j = τ_j − τ_{j−1}`.
    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(0.0)
            .chain(self.taus.iter().copied())
            .zip(self.taus.iter().copied())
            .map(|(a, b)| b - a)
    }

    /// Number of change points in `(0, s]`.
    pub fn count_up_to(&self, s: f64) -> usize {
        self.taus.partition_point(|tau| *tau <= s)
    }

    /// Extends the partition with fresh gaps until it covers `horizon`.
    pub fn extend<R: Rng + ?Sized>(&mut self, rate: GapRate, horizon: f64, rng: &mut R) {
        let mut last = self.taus.last().copied().unwrap_or(0.0);
        while last < horizon {
            last += rate.sample_gap(rng);
            self.taus.push(last);
        }
        self.horizon = self.horizon.max(horizon);
    }

    /// The unique `j` with `τ_{j−1} < t ≤ τ_j`.
    pub fn locate(&self, t: f64) -> Result<ComponentIndex> {
        if !(t > 0.0) {
            return Err(invalid(
                "t",
                format!("the partition covers (0, ∞); got t = {t}"),
            ));
        }
        if t > self.horizon {
            return Err(Error::BeyondHorizon {
                t,
                horizon: self.horizon,
            });
        }
        let before = self.taus.partition_point(|tau| *tau < t);
        Ok(ComponentIndex::new(before as u64 + 1).expect("positive"))
    }
}

/// Gaps drawn until `τ_J ≥ horizon`.
pub fn sample_partition<R: Rng + ?Sized>(
    rate: GapRate,
    horizon: f64,
    rng: &mut R,
) -> Result<Partition> {
    require_positive("horizon", horizon)?;
    let mut p = Partition {
        taus: Vec::new(),
        horizon,
    };
    p.extend(rate, horizon, rng);
    Ok(p)
}

/// Indicator weights and whether the active component fell beyond `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorWeights<T> {
    pub weights: WeightVector<T>,
    pub component: ComponentIndex,
    pub truncated: bool,
}

/// `w_j = 1(t ∈ A_j)` for `j ≤ K`; an active component beyond `K` is all tail.
pub fn indicator_weights<T: Scalar>(
    partition: &Partition,
    t: f64,
    k: usize,
) -> Result<IndicatorWeights<T>> {
    let component = partition.locate(t)?;
    Ok(IndicatorWeights {
        weights: WeightVector::point_mass(component, k),
        component,
        truncated: component.offset() >= k,
    })
}

/// `D(h) ∈ {0, 1}`: 1 iff `t` and `t + h` share a component.
pub fn overlap_exact(partition: &Partition, t: f64, h: f64) -> Result<u8> {
    if !(h >= 0.0) {
        return Err(invalid("h", format!("lag must be >= 0, got {h}")));
    }
    let a = partition.locate(t)?;
    let b = partition.locate(t + h)?;
    Ok(u8::from(a == b))
}

/// `P(z(t) = z(t+h)) = e^{−rate·h}`.
pub fn same_component_prob(rate: GapRate, h: f64) -> Result<f64> {
    if !(h >= 0.0) {
        return Err(invalid("h", format!("lag must be >= 0, got {h}")));
    }
    Ok((-rate.get() * h).exp())
}

/// Observations `(t_i, y_i)` with strictly increasing times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl Dataset {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Data(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Data(format!(
                "time {} at row {} must be finite and > 0",
                times[i],
                i + 1
            )));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(Error::Data(format!("non-finite value at row {}", i + 1)));
        }
        if let Some(i) = times.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::NonIncreasingGrid { index: i + 1 });
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }

    /// Writes `t,y` rows at 17 significant digits, after optional `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, comments: &[String]) -> std::io::Result<()> {
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "y"])?;
        for (t, y) in self.times.iter().zip(&self.values) {
            w.write_record([fmt_g17(*t), fmt_g17(*y)])?;
        }
        w.flush()
    }

    /// Reads the `t,y` CSV, skipping `#` comment lines.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| Error::Data(format!("header: {e}")))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["t", "y"] {
            return Err(Error::Data(format!(
                "expected header `t,y`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut times, mut values) = (Vec::new(), Vec::new());
        for (i, rec) in reader.records().enumerate() {
            let row = i + 1;
            let rec = rec.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
            let parse = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Data(format!("row {row}: missing column")))?
                    .parse::<f64>()
                    .map_err(|e| Error::Data(format!("row {row}: {e}")))
            };
            if rec.len() != 2 {
                return Err(Error::Data(format!(
                    "row {row}: expected 2 fields, found {}",
                    rec.len()
                )));
            }
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        Dataset::new(times, values).map_err(|e| match e {
            Error::NonIncreasingGrid { index } => Error::Data(format!(
                "row {}: times must be strictly increasing",
                index + 1
            )),
            other => other,
        })
    }
}

/// Formats like C's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

/// `y_i ~ K(·|θ_{z(t_i)})` with atoms drawn from the baseline on first use.
pub fn generate_data<R: Rng + ?Sized>(
    partition: &Partition,
    atoms: &mut AtomStore<f64>,
    kernel: KernelSpec,
    times: &[TimePoint],
    rng: &mut R,
) -> Result<Dataset> {
    if times.is_empty() {
        return Err(Error::Empty("observation times"));
    }
    let mut values = Vec::with_capacity(times.len());
    for t in times {
        let j = partition.locate(t.get())?;
        let atom = *atoms.ensure(j, rng);
        values.push(kernel.sample(&atom, rng));
    }
    Dataset::new(times.iter().map(|t| t.get()).collect(), values)
}
