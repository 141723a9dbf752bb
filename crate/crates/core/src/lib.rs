//! Bayesian variable selection for high-dimensional generalized linear models.
//!
//! The crate provides the truncated spike-and-slab prior over model
//! indicators, a reversible-jump sampler for the model-space posterior,
//! Hellinger-distance evaluation of fitted densities against a known truth,
//! selected posterior estimates, numeric audits of the rate conditions and
//! neighborhood selection for Gaussian graphical models.

pub mod error;
pub mod estimators;
pub mod audit;
pub mod baselines;
pub mod glm;
pub mod graphical;
pub mod hellinger;
pub mod posterior;
pub mod prior;
pub mod special;
pub mod summary;

pub use error::{Error, Result};
pub use glm::{GlmFamily, LinearParameter, NaturalTerms, ResponseMeasure};
pub use hellinger::{
    hellinger_distance, posterior_hellinger, tail_probability, FrozenX, HellingerEstimate, TrueModel, XLaw,
    XSource,
};
pub use posterior::{
    conjugate_log_marginal, enumerate_posterior, inclusion_probabilities, log_unnormalized_posterior,
    mcmc_run, Chain, Dataset, McmcConfig, ModelState, PosteriorDraw,
};
pub use prior::{DispersionPrior, EigenBound, LogProb, ModelIndicator, PriorSpec, VPolicy};
