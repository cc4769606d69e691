//! Posterior inference for the exponential-gap change-point model.
//!
//! Segment parameters are integrated out under the conjugate
//! normal-inverse-gamma baseline; change points inside the observed window
//! and the gap rate are sampled by Metropolis-within-Gibbs.

mod marginal;
mod sampler;
mod summary;

pub use marginal::segment_marginal_likelihood;
pub use sampler::{
    run_chains, run_sampler, Acceptance, Draw, InferenceConfig, MoveStats, PosteriorDraws,
    RatePrior,
};
pub use summary::{posterior_summary, CellProbability, PosteriorSummary, QuantitySummary};
