//! Simulation studies: data generation from known potential-outcome models,
//! ground truth, a doubly robust comparator and repeated-sampling
//! evaluation of interval estimators.

mod aipw;
mod application;
mod config;
mod generate;
mod pool;
mod replicate;
mod truth;

pub use aipw::{aipw_estimate, AipwResult, AIPW_TRUNCATION};
pub use application::{
    application_analogue, APPLICATION_ADVERSE_RATE, APPLICATION_DEATH_RATE, APPLICATION_SEED,
};
pub use config::{AlphaSpec, ArmParameters, Resample, SimulationConfig};
pub use generate::{
    arm_probabilities, generate_dataset, select_covariates, PotentialOutcomes, SimulatedCohort,
};
pub use pool::{
    default_covariate_pool, raw_covariate_pool, synthetic_covariate_pool, POOL_COLUMNS, POOL_SEED,
    POOL_SIZE,
};
pub use replicate::{
    bayesian_intervals, run_replications, IntervalRecord, Method, MetricRow, ReplicationMetrics,
    ReplicationSettings,
};
pub use truth::{monte_carlo_estimands, true_estimands, true_parameter_fits, MonteCarloTruth};
