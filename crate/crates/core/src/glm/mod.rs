//! Penalized Bernoulli regression: link functions, coefficient priors, MAP
//! fitting by Newton-Raphson, and Laplace-approximation posterior draws.

mod fit;
mod link;
mod prior;
mod sample;

pub use fit::{
    fit_map, fit_map_with, linear_predictor, Evaluation, FitOptions, LogPosterior, ModelFit,
};
pub use link::{logit, sigmoid, softplus, LinkFunction};
pub use prior::{
    CoefficientPrior, PriorKind, PriorSet, PriorSpec, CAUCHY_INTERCEPT_SCALE, LAPLACE_SMOOTHING,
};
pub use sample::{sample_posterior, PosteriorSampler, PSD_TOLERANCE};
