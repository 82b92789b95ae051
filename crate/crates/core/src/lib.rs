//! Causal effects on a composite ordinal outcome of an adverse event and
//! death, estimated by multiple imputation of the missing potential outcomes
//! from Bayesian outcome models adjusted for the propensity score.
//!
//! The numerical core (links, priors, MAP fitting, spline basis, estimand
//! algebra, pooling) is generic over [`scalar::Real`]; the data-driven
//! pipeline runs in `f64`, and the aliases below fix that choice.

pub mod cohort;
pub mod design;
pub mod error;
pub mod estimands;
pub mod glm;
pub mod imputation;
pub mod io;
pub mod model;
pub mod outcome;
pub mod pooling;
pub mod scalar;
pub mod sensitivity;
pub mod simulation;

pub use error::{Error, Result};

pub type LinkFunction = glm::LinkFunction<f64>;
pub type PriorSpec = glm::PriorSpec<f64>;
pub type ModelFit = glm::ModelFit<f64>;
pub type PosteriorSampler = glm::PosteriorSampler<f64>;
pub type SplineBasis = design::SplineBasis<f64>;
pub type SubclassAssignment = design::SubclassAssignment<f64>;
pub type PropensityFit = design::PropensityFit<f64>;
pub type OutcomePriors = outcome::OutcomePriors<f64>;
pub type ArmOutcomeFits = outcome::ArmOutcomeFits<f64>;
pub type JointOrdinalDistribution = estimands::JointOrdinalDistribution<f64>;
pub type EstimandSet = estimands::EstimandSet<f64>;
pub type PooledResult = pooling::PooledResult<f64>;
