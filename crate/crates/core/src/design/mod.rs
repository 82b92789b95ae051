//! Propensity scores, quantile subclassification and the natural cubic spline
//! basis on the logit propensity score.

mod propensity;
mod quantile;
mod spline;
mod subclass;

pub use propensity::{estimate_propensity, PropensityFit, SCORE_CLIP};
pub use quantile::{quantile_sorted, sorted_copy};
pub use spline::{build_spline_basis, logit_knots, quantile_knots, spline_with_knots, SplineBasis};
pub use subclass::{label_for, quantile_boundaries, subclassify, SubclassAssignment, MIN_PER_ARM};
