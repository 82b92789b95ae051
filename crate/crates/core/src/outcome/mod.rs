//! Per-arm outcome models: adverse event on the propensity spline and
//! adjustment covariates, then death on the same terms plus the adverse event.

mod cells;
mod design;
mod fits;

pub(crate) use cells::cells_unchecked;
pub use cells::{compose_ordinal, ordinal_cell_probs, CellProbabilities};
pub use design::{KnotRule, OutcomeDesign};
pub use fits::{
    adverse_predictor, death_predictor, fit_arm_models, fit_arm_models_eta_zero, ArmOutcomeFits,
    OutcomePriors,
};
