use nalgebra::DMatrix;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cohort::Cohort;
use crate::design::estimate_propensity;
use crate::error::{Error, Result};
use crate::estimands::Estimand;
use crate::glm::{fit_map, LinkFunction, ModelFit, PriorSpec};
use crate::outcome::compose_ordinal;

/// Propensity scores are truncated to `[AIPW_TRUNCATION, 1 - AIPW_TRUNCATION]`.
pub const AIPW_TRUNCATION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AipwResult {
    pub point: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
    /// Units whose propensity score was truncated.
    pub truncated: usize,
}

/// Binary outcome whose arm-mean difference is the estimand, or
/// `NotSupported` for estimands without a doubly robust estimator here.
fn binary_outcome(estimand: Estimand) -> Result<Box<dyn Fn(u8, u8) -> u8>> {
    Ok(match estimand {
        Estimand::IttAdverse => Box::new(|a, _| a),
        Estimand::IttDeath => Box::new(|_, d| d),
        Estimand::IttComposite => Box::new(|a, d| a | d),
        Estimand::LevelDiff { level } => {
            Box::new(move |a, d| u8::from(compose_ordinal(a, d) == level))
        }
        Estimand::Delta { level } => Box::new(move |a, d| u8::from(compose_ordinal(a, d) <= level)),
        other => {
            return Err(Error::NotSupported(format!(
                "no doubly robust estimator for {other}"
            )))
        }
    })
}

/// Logistic MAP fit with a flat prior, retried under the weakly informative
/// Cauchy prior when the data separate.
fn logistic_fit(x: &DMatrix<f64>, y: &[u8]) -> Result<ModelFit<f64>> {
    let flat = PriorSpec::<f64>::flat().expand(x.ncols());
    match fit_map(x, y, &flat, LinkFunction::Logit) {
        Err(Error::SingularCurvature(_)) => fit_map(
            x,
            y,
            &PriorSpec::cauchy().expand(x.ncols()),
            LinkFunction::Logit,
        ),
        r => r,
    }
}

fn arm_outcome_predictions(cohort: &Cohort, y: &[u8], arm: u8) -> Result<Vec<f64>> {
    let idx = cohort.arm_indices(arm);
    let ys: Vec<u8> = idx.iter().map(|&i| y[i]).collect();
    let x = cohort.covariates.select_rows(&idx);
    // A constant outcome has no logistic fit; its regression is the constant.
    let first = ys.first().copied().unwrap_or(0);
    if ys.iter().all(|&v| v == first) {
        return Ok(vec![f64::from(first); cohort.len()]);
    }
    let fit = logistic_fit(&x, &ys)?;
    Ok(cohort
        .covariates
        .row_iter()
        .map(|r| {
            let row: Vec<f64> = r.iter().copied().collect();
            fit.link.inverse_unchecked(fit.linear_predictor(&row))
        })
        .collect())
}

/// Augmented inverse-probability-weighted estimate of an arm difference in a
/// binary outcome, with both nuisance models logistic on all covariates,
/// influence-function standard error and a normal interval.
pub fn aipw_estimate(cohort: &Cohort, estimand: Estimand, alpha: f64) -> Result<AipwResult> {
    let f = binary_outcome(estimand)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    cohort.validate()?;
    let n = cohort.len();
    let y: Vec<u8> = (0..n).map(|i| f(cohort.a[i], cohort.d[i])).collect();
    let ps = estimate_propensity(&cohort.covariates, &cohort.w, &PriorSpec::flat())
        .or_else(|_| estimate_propensity(&cohort.covariates, &cohort.w, &PriorSpec::cauchy()))?;
    let mut truncated = 0;
    let e: Vec<f64> = ps
        .scores
        .iter()
        .map(|&p| {
            let c = p.clamp(AIPW_TRUNCATION, 1.0 - AIPW_TRUNCATION);
            if c != p {
                truncated += 1;
            }
            c
        })
        .collect();
    if truncated > 0 {
        log::warn!(
            "{truncated} propensity scores truncated to [{AIPW_TRUNCATION}, {}]",
            1.0 - AIPW_TRUNCATION
        );
    }
    let mu1 = arm_outcome_predictions(cohort, &y, 1)?;
    let mu0 = arm_outcome_predictions(cohort, &y, 0)?;
    let psi: Vec<f64> = (0..n)
        .map(|i| {
            let yi = f64::from(y[i]);
            let wi = f64::from(cohort.w[i]);
            mu1[i] - mu0[i] + wi * (yi - mu1[i]) / e[i] - (1.0 - wi) * (yi - mu0[i]) / (1.0 - e[i])
        })
        .collect();
    let nf = n as f64;
    let point = psi.iter().sum::<f64>() / nf;
    let var = psi.iter().map(|p| (p - point).powi(2)).sum::<f64>() / (nf - 1.0);
    let se = (var / nf).sqrt();
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    Ok(AipwResult {
        point,
        se,
        lo: point - z * se,
        hi: point + z * se,
        truncated,
    })
}
