//! Parameter draws, imputation of the missing potential outcomes and
//! posterior predictive checks.

mod check;
mod impute;
mod streams;

pub use check::{posterior_predictive_check, PredictiveCheck};
pub use impute::{
    draw_parameters, impute_once, impute_with, run_imputations, CompletedDataset, ConfounderShift,
    ImputationRun, ParameterDraw, ParameterSampler,
};
pub use streams::{child_seed, stream_rng, Purpose};
