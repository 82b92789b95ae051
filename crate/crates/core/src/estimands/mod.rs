//! Causal estimands of the composite ordinal outcome, from completed datasets
//! or from model parameters.

mod compute;
mod joint;
mod set;

pub use compute::{
    finite_sample_estimands, joint_from_cells, sace_from_cells, sace_superpop, superpop_estimands,
    unit_cells, Population,
};
pub use joint::JointOrdinalDistribution;
pub use set::{Estimand, EstimandSet, SURVIVOR_MASS_FLOOR};
