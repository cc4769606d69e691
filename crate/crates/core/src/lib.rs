//! Continuous-time mixture weight processes and their overlap behaviour.
//!
//! Three families of time-indexed mixture weights are provided: geometric
//! weights driven by a Wright–Fisher diffusion, normalized random measures
//! with exponentially decaying jumps, and piecewise-constant indicator
//! weights from an exponential-gap change-point process. The `experiments`
//! module compares their expected overlap `E Σ_j w_j(t) w_j(t+h)` as `h → 0`,
//! and `inference` fits the change-point model to data.
//!
//! Weight and overlap arithmetic is generic over [`Scalar`] (`f32`/`f64`);
//! samplers and inference work in `f64`.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod changepoint;
pub mod error;
pub mod experiments;
pub mod geometric;
pub mod inference;
pub mod mixture;
pub mod nrm;
pub mod rng;
pub mod scalar;
pub mod special;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
pub use rng::RandomStream;
pub use scalar::Scalar;
pub use stats::OverlapEstimate;
pub use weights::{
    overlap_statistic, sup_weight_diff, Bounded, ComponentIndex, TimePoint, WeightVector,
};

pub type Weights = WeightVector<f64>;
pub type Weights32 = WeightVector<f32>;
pub type Atom = mixture::NormalAtom<f64>;
pub type Atoms = mixture::AtomStore<f64>;
