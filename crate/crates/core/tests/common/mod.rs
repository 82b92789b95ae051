#![allow(dead_code)]

pub mod oracles;

use nalgebra::DMatrix;
use ordinal_impute::cohort::Cohort;
use ordinal_impute::model::{fit_models, FittedModels, ModelSettings};
use ordinal_impute::outcome::OutcomeDesign;
use ordinal_impute::simulation::{
    generate_dataset, synthetic_covariate_pool, true_parameter_fits, SimulationConfig,
};
use ordinal_impute::ArmOutcomeFits;

pub fn small_config(n: usize) -> SimulationConfig {
    SimulationConfig {
        n,
        ..SimulationConfig::case_study_1()
    }
}

/// Simulated cohort of size `n` from the first case study.
pub fn simulated_cohort(n: usize, seed: u64) -> Cohort {
    let pool = synthetic_covariate_pool(n, seed ^ 0x5eed);
    generate_dataset(&small_config(n), &pool, seed)
        .unwrap()
        .cohort
}

pub fn fitted(cohort: &Cohort) -> FittedModels {
    fit_models(cohort, &ModelSettings::default()).unwrap()
}

/// Generator parameters as point-mass fits on a raw covariate design.
pub fn oracle_fits(
    config: &SimulationConfig,
    x: &DMatrix<f64>,
) -> ([ArmOutcomeFits; 2], OutcomeDesign) {
    (
        true_parameter_fits(config),
        OutcomeDesign::from_matrix(x.clone()),
    )
}

/// Standard error of a proportion estimated from `n` Bernoulli trials.
pub fn prop_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt().max(1e-12)
}
