use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{fit_map, logit, LinkFunction, ModelFit, PriorSpec};
use crate::scalar::{lit, Real};

/// Scores are clipped to `[CLIP, 1 - CLIP]` before taking logits.
pub const SCORE_CLIP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct PropensityFit<T: Real> {
    pub model: ModelFit<T>,
    pub scores: Vec<T>,
    pub logit_scores: Vec<T>,
}

/// Logistic MAP fit of treatment on covariates.
pub fn estimate_propensity<T: Real>(
    covariates: &DMatrix<T>,
    treatment: &[u8],
    prior: &PriorSpec<T>,
) -> Result<PropensityFit<T>> {
    let treated = treatment.iter().filter(|&&w| w == 1).count();
    if treated == 0 || treated == treatment.len() {
        return Err(Error::InvalidDesign(
            "propensity model needs units in both arms".into(),
        ));
    }
    prior.validate()?;
    let priors = prior.expand(covariates.ncols());
    let model = fit_map(covariates, treatment, &priors, LinkFunction::Logit)?;
    if !model.converged {
        log::warn!("propensity fit hit the iteration cap");
    }
    let lo = lit::<T>(SCORE_CLIP);
    let hi = T::one() - lo;
    let scores: Vec<T> = covariates
        .row_iter()
        .map(|r| {
            let row: Vec<T> = r.iter().copied().collect();
            let p = model.link.inverse_unchecked(model.linear_predictor(&row));
            p.max(lo).min(hi)
        })
        .collect();
    let logit_scores = scores.iter().map(|&p| logit(p)).collect();
    Ok(PropensityFit {
        model,
        scores,
        logit_scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_rows_give_equal_scores() {
        let x = DMatrix::from_fn(20, 2, |_, j| j as f64 + 0.5);
        let w: Vec<u8> = (0..20).map(|i| u8::from(i < 7)).collect();
        let fit = estimate_propensity(&x, &w, &PriorSpec::ridge()).unwrap();
        for s in &fit.scores {
            assert!((s - 0.35).abs() < 1e-6);
            assert_eq!(*s, fit.scores[0]);
        }
    }

    #[test]
    fn single_arm_and_separation() {
        let x = DMatrix::from_fn(10, 1, |i, _| i as f64);
        assert!(matches!(
            estimate_propensity(&x, &[1; 10], &PriorSpec::flat()),
            Err(Error::InvalidDesign(_))
        ));
        let w: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        assert!(matches!(
            estimate_propensity(&x, &w, &PriorSpec::flat()),
            Err(Error::SingularCurvature(_))
        ));
    }
}
