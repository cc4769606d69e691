//! Truncated mixture weights and the model-agnostic overlap machinery.
//!
//! Every weight process in this crate produces a [`WeightVector`]: the first
//! `K` weights of `{ω_j(t)}` plus the mass of everything beyond `K`. Quantities
//! computed from truncated vectors carry an explicit bound on what the
//! truncation could have changed.

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, Scalar};

/// A component label `j ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ComponentIndex(u64);

impl ComponentIndex {
    pub const FIRST: ComponentIndex = ComponentIndex(1);

    pub fn new(j: u64) -> Option<Self> {
        (j >= 1).then_some(Self(j))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Zero-based position into a weight vector.
    pub fn offset(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// A nonnegative, finite time.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TimePoint(f64);

impl TimePoint {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t >= 0.0 {
            Ok(Self(t))
        } else {
            Err(crate::error::invalid(
                "t",
                format!("time must be finite and >= 0, got {t}"),
            ))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Weights `w_1..w_K` and the mass `tail_mass` of all components beyond `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector<T> {
    weights: Vec<T>,
    tail_mass: T,
}

impl<T: Scalar> WeightVector<T> {
    /// Validates `w_j ∈ [0,1]`, `tail ∈ [0,1]` and `Σw + tail = 1`.
    pub fn new(weights: Vec<T>, tail_mass: T) -> Result<Self> {
        let unit = |x: T| x >= T::zero() && x <= T::one();
        if let Some((j, w)) = weights.iter().enumerate().find(|(_, w)| !unit(**w)) {
            return Err(Error::InvalidWeights(format!(
                "w_{} = {w} outside [0,1]",
                j + 1
            )));
        }
        if !unit(tail_mass) {
            return Err(Error::InvalidWeights(format!(
                "tail mass {tail_mass} outside [0,1]"
            )));
        }
        let total = compensated_sum(weights.iter().copied()) + tail_mass;
        if (total - T::one()).abs() > T::normalization_tol() {
            return Err(Error::InvalidWeights(format!(
                "weights plus tail sum to {total}"
            )));
        }
        Ok(Self { weights, tail_mass })
    }

    /// A vector with no truncation.
    pub fn complete(weights: Vec<T>) -> Result<Self> {
        Self::new(weights, T::zero())
    }

    /// All mass on component `j` with `K` materialized slots.
    pub fn point_mass(j: ComponentIndex, k: usize) -> Self {
        let mut weights = vec![T::zero(); k];
        if j.offset() < k {
            weights[j.offset()] = T::one();
            Self {
                weights,
                tail_mass: T::zero(),
            }
        } else {
            Self {
                weights,
                tail_mass: T::one(),
            }
        }
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn tail_mass(&self) -> T {
        self.tail_mass
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Weight of component `j`, `None` when `j` lies in the tail.
    pub fn get(&self, j: ComponentIndex) -> Option<T> {
        self.weights.get(j.offset()).copied()
    }

    /// Zero-pads to `k` slots; only exact when the tail is empty.
    fn padded(&self, k: usize) -> Option<Vec<T>> {
        if k <= self.len() {
            return Some(self.weights.clone());
        }
        if self.tail_mass > T::zero() {
            return None;
        }
        let mut w = self.weights.clone();
        w.resize(k, T::zero());
        Some(w)
    }
}

type AlignedPair<'a, T> = (Cow<'a, [T]>, Cow<'a, [T]>);

fn align<'a, T: Scalar>(
    a: &'a WeightVector<T>,
    b: &'a WeightVector<T>,
) -> Result<AlignedPair<'a, T>> {
    if a.len() == b.len() {
        return Ok((Cow::Borrowed(a.weights()), Cow::Borrowed(b.weights())));
    }
    let k = a.len().max(b.len());
    let err = Error::Alignment {
        left: a.len(),
        right: b.len(),
    };
    let pa = a.padded(k).ok_or(err.clone())?;
    let pb = b.padded(k).ok_or(err)?;
    Ok((Cow::Owned(pa), Cow::Owned(pb)))
}

/// A truncated sum and how far the untruncated value can lie above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounded<T> {
    pub value: T,
    pub truncation_bound: T,
}

impl<T: Scalar> Bounded<T> {
    pub fn upper(&self) -> T {
        self.value + self.truncation_bound
    }

    pub fn is_exact(&self) -> bool {
        self.truncation_bound == T::zero()
    }
}

/// `D(h) = Σ_j w_j(t)·w_j(t+h)` over materialized indices.
///
/// The true overlap lies in `[value, value + min(tail_t, tail_th)]`. Vectors of
/// different length are aligned by zero-padding the shorter one, which is
/// only possible when the shorter one has no tail mass.
pub fn overlap_statistic<T: Scalar>(
    w_t: &WeightVector<T>,
    w_th: &WeightVector<T>,
) -> Result<Bounded<T>> {
    let (a, b) = align(w_t, w_th)?;
    let value = compensated_sum(a.iter().zip(b.iter()).map(|(x, y)| *x * *y));
    Ok(Bounded {
        value: value.min(T::one()),
        truncation_bound: w_t.tail_mass().min(w_th.tail_mass()),
    })
}

/// `sup_j |w_j(t+h) − w_j(t)|` over materialized indices.
///
/// Indices in either tail can differ by up to `max(tail_t, tail_th)`.
pub fn sup_weight_diff<T: Scalar>(
    w_t: &WeightVector<T>,
    w_th: &WeightVector<T>,
) -> Result<Bounded<T>> {
    let (a, b) = align(w_t, w_th)?;
    let value = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (*x - *y).abs())
        .fold(T::zero(), T::max);
    Ok(Bounded {
        value,
        truncation_bound: w_t.tail_mass().max(w_th.tail_mass()),
    })
}

/// Draws `j` with probability `w_j`. Landing in the tail is an error.
pub fn sample_component<T: Scalar, R: Rng + ?Sized>(
    w: &WeightVector<T>,
    rng: &mut R,
) -> Result<ComponentIndex> {
    sample_component_with(w, rng, |_, _| Err(Error::Truncation))
}

/// Draws `j` with probability `w_j`; tail draws are resolved by `extend`,
/// which receives the number of materialized components.
pub fn sample_component_with<T, R, F>(
    w: &WeightVector<T>,
    rng: &mut R,
    extend: F,
) -> Result<ComponentIndex>
where
    T: Scalar,
    R: Rng + ?Sized,
    F: FnOnce(usize, &mut R) -> Result<ComponentIndex>,
{
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, wj) in w.weights().iter().enumerate() {
        let wj = wj.to_f64().unwrap_or(0.0);
        acc += wj;
        if u < acc && wj > 0.0 {
            return Ok(ComponentIndex(i as u64 + 1));
        }
    }
    if w.tail_mass() > T::zero() {
        return extend(w.len(), rng);
    }
    // Rounding left u above the running sum; fall back to the last positive weight.
    w.weights()
        .iter()
        .rposition(|x| *x > T::zero())
        .map(|i| ComponentIndex(i as u64 + 1))
        .ok_or(Error::Truncation)
}
