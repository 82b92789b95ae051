//! Design-stage and outcome-model fitting for an observed cohort.

use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::design::{estimate_propensity, PropensityFit};
use crate::error::{Error, Result, StageContext};
use crate::glm::{LinkFunction, PriorSpec};
use crate::outcome::{fit_arm_models, ArmOutcomeFits, KnotRule, OutcomeDesign, OutcomePriors};

/// Which covariate is dropped from the linear adjustment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmitCovariate {
    #[default]
    Last,
    Index(usize),
    None,
}

impl OmitCovariate {
    pub fn resolve(self, n_covariates: usize) -> Option<usize> {
        match self {
            OmitCovariate::Last => n_covariates.checked_sub(1),
            OmitCovariate::Index(j) => Some(j),
            OmitCovariate::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSettings {
    pub propensity_prior: PriorSpec<f64>,
    pub knots: KnotRule,
    pub omit: OmitCovariate,
    pub priors: OutcomePriors<f64>,
    pub link: LinkFunction<f64>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        ModelSettings {
            propensity_prior: PriorSpec::flat(),
            knots: KnotRule::default(),
            omit: OmitCovariate::Last,
            priors: OutcomePriors::ridge(),
            link: LinkFunction::Logit,
        }
    }
}

impl ModelSettings {
    /// Settings used for the simulated case studies: Cauchy(0, 2.5) priors on
    /// every outcome-model coefficient.
    pub fn simulation() -> Self {
        ModelSettings {
            priors: OutcomePriors::cauchy(),
            ..Self::default()
        }
    }
}

/// Everything fitted before imputation.
#[derive(Debug, Clone, Serialize)]
pub struct FittedModels {
    pub propensity: PropensityFit<f64>,
    pub design: OutcomeDesign,
    /// Indexed by arm.
    pub arms: [ArmOutcomeFits<f64>; 2],
}

/// Propensity score, spline design, then per-arm outcome models.
pub fn fit_models(cohort: &Cohort, settings: &ModelSettings) -> Result<FittedModels> {
    cohort.validate().stage("input")?;
    let propensity = estimate_propensity(&cohort.covariates, &cohort.w, &settings.propensity_prior)
        .stage("propensity")?;
    let design = OutcomeDesign::build(
        &propensity.scores,
        &propensity.logit_scores,
        &cohort.w,
        &cohort.covariates,
        settings.knots,
        settings.omit.resolve(cohort.n_covariates()),
    )
    .stage("design")?;
    let fit_arm = |arm: u8| -> Result<ArmOutcomeFits<f64>> {
        let idx = cohort.arm_indices(arm);
        if idx.is_empty() {
            return Err(Error::InvalidDesign(format!("arm {arm} has no units")));
        }
        let a: Vec<u8> = idx.iter().map(|&i| cohort.a[i]).collect();
        let d: Vec<u8> = idx.iter().map(|&i| cohort.d[i]).collect();
        fit_arm_models(
            arm,
            &design.rows(&idx),
            &a,
            &d,
            design.n_spline,
            &settings.priors,
            settings.link,
        )
    };
    let (f0, f1) = rayon::join(|| fit_arm(0), || fit_arm(1));
    let arms = [f0.stage("outcome models")?, f1.stage("outcome models")?];
    Ok(FittedModels {
        propensity,
        design,
        arms,
    })
}
