use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{
    fit_map, linear_predictor, CoefficientPrior, LinkFunction, ModelFit, PriorSet, PriorSpec,
};
use crate::scalar::{lit, Real};

/// Priors for the adverse-event and death models.
///
/// `linear` applies to the adjustment covariates and sets the intercept rule.
/// When `spline_sd` is set, spline coefficients and the adverse-event
/// coefficient of the death model get `N(0, spline_sd^2)`; otherwise they
/// share the `linear` prior. With `scaled`, every slope prior is divided by
/// the spread of its column in the arm's design (see [`PriorSet::scaled_to`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomePriors<T> {
    pub linear: PriorSpec<T>,
    pub spline_sd: Option<T>,
    #[serde(default)]
    pub scaled: bool,
}

impl<T: Real> OutcomePriors<T> {
    /// Cauchy(0, 2.5) on every slope, relative to the column spread.
    pub fn cauchy() -> Self {
        OutcomePriors {
            linear: PriorSpec::cauchy(),
            spline_sd: None,
            scaled: true,
        }
    }

    /// Ridge on the adjustment covariates, `N(0, 8^2)` on spline terms and
    /// the adverse-event coefficient.
    pub fn ridge() -> Self {
        OutcomePriors {
            linear: PriorSpec::ridge(),
            spline_sd: Some(lit(8.0)),
            scaled: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.linear.validate()?;
        if let Some(sd) = self.spline_sd {
            if !(sd > T::zero()) {
                return Err(Error::InvalidConfig(format!(
                    "spline prior sd must be positive, got {sd:?}"
                )));
            }
        }
        Ok(())
    }

    fn flexible(&self) -> CoefficientPrior<T> {
        match self.spline_sd {
            Some(sd) => CoefficientPrior::Normal {
                location: T::zero(),
                sd,
            },
            None => self.linear.slope(),
        }
    }

    fn scale(&self, set: PriorSet<T>, design: &DMatrix<T>) -> PriorSet<T> {
        if self.scaled {
            set.scaled_to(design)
        } else {
            set
        }
    }

    /// Priors for `[intercept, spline.., linear..]`.
    pub fn adverse_set(&self, n_spline: usize, n_linear: usize) -> PriorSet<T> {
        PriorSet(vec![self.linear.intercept()])
            .extend_with(self.flexible(), n_spline)
            .extend_with(self.linear.slope(), n_linear)
    }

    /// Priors for `[intercept, spline.., linear.., adverse event]`.
    pub fn death_set(&self, n_spline: usize, n_linear: usize) -> PriorSet<T> {
        self.adverse_set(n_spline, n_linear)
            .extend_with(self.flexible(), 1)
    }
}

/// Fitted adverse-event and death models for one arm.
///
/// The death model's last coefficient multiplies the adverse-event indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct ArmOutcomeFits<T: Real> {
    pub arm: u8,
    pub adverse_fit: ModelFit<T>,
    pub death_fit: ModelFit<T>,
}

impl<T: Real> ArmOutcomeFits<T> {
    /// Number of design columns (excluding intercept).
    pub fn design_dim(&self) -> usize {
        self.adverse_fit.dim() - 1
    }

    fn check_row(&self, row: &[T]) -> Result<()> {
        if row.len() != self.design_dim() {
            return Err(Error::InvalidInput(format!(
                "design row has {} entries, model expects {}",
                row.len(),
                self.design_dim()
            )));
        }
        Ok(())
    }

    pub fn predict_adverse(&self, row: &[T]) -> Result<T> {
        self.check_row(row)?;
        let eta = adverse_predictor(self.adverse_fit.coefficients.as_slice(), row);
        self.adverse_fit.link.inverse(eta)
    }

    pub fn predict_death(&self, row: &[T], a: u8) -> Result<T> {
        self.check_row(row)?;
        let eta = death_predictor(self.death_fit.coefficients.as_slice(), row, a);
        self.death_fit.link.inverse(eta)
    }

    /// Adverse-event coefficient of the death model.
    pub fn eta(&self) -> T {
        self.death_fit.coefficients[self.death_fit.dim() - 1]
    }
}

/// Adverse-event linear predictor for coefficients `[intercept, slopes..]`.
#[inline]
pub fn adverse_predictor<T: Real>(coef: &[T], row: &[T]) -> T {
    linear_predictor(coef, row)
}

/// Death linear predictor; the last coefficient multiplies `a`.
#[inline]
pub fn death_predictor<T: Real>(coef: &[T], row: &[T], a: u8) -> T {
    let k = coef.len() - 1;
    let eta = linear_predictor(&coef[..k], row);
    if a == 1 {
        eta + coef[k]
    } else {
        eta
    }
}

fn check_arm_inputs<T: Real>(design: &DMatrix<T>, a: &[u8], d: &[u8]) -> Result<()> {
    if design.nrows() == 0 {
        return Err(Error::InvalidDesign("arm has no units".into()));
    }
    if a.len() != design.nrows() || d.len() != design.nrows() {
        return Err(Error::InvalidInput(
            "outcome vectors do not match the arm design".into(),
        ));
    }
    Ok(())
}

/// MAP fits of `A ~ [1, design]` and `D ~ [1, design, A]` for the units of
/// one arm. `design` holds the spline columns first (`n_spline` of them).
pub fn fit_arm_models<T: Real>(
    arm: u8,
    design: &DMatrix<T>,
    a: &[u8],
    d: &[u8],
    n_spline: usize,
    priors: &OutcomePriors<T>,
    link: LinkFunction<T>,
) -> Result<ArmOutcomeFits<T>> {
    check_arm_inputs(design, a, d)?;
    priors.validate()?;
    let q = design.ncols();
    let n_linear = q - n_spline;
    let adverse_fit = fit_map(
        design,
        a,
        &priors.scale(priors.adverse_set(n_spline, n_linear), design),
        link,
    )?;
    let mut with_a = design.clone().insert_column(q, T::zero());
    for (i, &ai) in a.iter().enumerate() {
        with_a[(i, q)] = lit(f64::from(ai));
    }
    let death_fit = fit_map(
        &with_a,
        d,
        &priors.scale(priors.death_set(n_spline, n_linear), &with_a),
        link,
    )?;
    for (name, f) in [("adverse-event", &adverse_fit), ("death", &death_fit)] {
        if !f.converged {
            log::warn!("arm {arm} {name} model hit the iteration cap");
        }
    }
    Ok(ArmOutcomeFits {
        arm,
        adverse_fit,
        death_fit,
    })
}

/// As [`fit_arm_models`] with the adverse-event coefficient of the death
/// model fixed at zero (zero posterior variance).
pub fn fit_arm_models_eta_zero<T: Real>(
    arm: u8,
    design: &DMatrix<T>,
    a: &[u8],
    d: &[u8],
    n_spline: usize,
    priors: &OutcomePriors<T>,
    link: LinkFunction<T>,
) -> Result<ArmOutcomeFits<T>> {
    check_arm_inputs(design, a, d)?;
    priors.validate()?;
    let q = design.ncols();
    let set = priors.scale(priors.adverse_set(n_spline, q - n_spline), design);
    let adverse_fit = fit_map(design, a, &set, link)?;
    let reduced = fit_map(design, d, &set, link)?;
    let p = reduced.dim();
    let mut coefficients = DVector::<T>::zeros(p + 1);
    coefficients.rows_mut(0, p).copy_from(&reduced.coefficients);
    let mut covariance = DMatrix::<T>::zeros(p + 1, p + 1);
    covariance
        .view_mut((0, 0), (p, p))
        .copy_from(&reduced.covariance);
    Ok(ArmOutcomeFits {
        arm,
        adverse_fit,
        death_fit: ModelFit {
            coefficients,
            covariance,
            ..reduced
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glm::logit;

    fn fits(adverse: Vec<f64>, death: Vec<f64>) -> ArmOutcomeFits<f64> {
        ArmOutcomeFits {
            arm: 1,
            adverse_fit: ModelFit::point_mass(DVector::from_vec(adverse), LinkFunction::Logit),
            death_fit: ModelFit::point_mass(DVector::from_vec(death), LinkFunction::Logit),
        }
    }

    #[test]
    fn predictions() {
        let f = fits(vec![0.0, 0.0], vec![0.0, 0.0, 0.0]);
        assert_eq!(f.predict_adverse(&[3.0]).unwrap(), 0.5);
        assert_eq!(
            f.predict_death(&[3.0], 0).unwrap(),
            f.predict_death(&[3.0], 1).unwrap()
        );
        let f = fits(
            vec![logit(0.2), 0.0],
            vec![logit(0.3), 0.0, logit(0.6) - logit(0.3)],
        );
        assert!((f.predict_adverse(&[1.0]).unwrap() - 0.2).abs() < 1e-12);
        assert!((f.predict_death(&[1.0], 1).unwrap() - 0.6).abs() < 1e-12);
        assert!(f.predict_death(&[1.0], 1).unwrap() > f.predict_death(&[1.0], 0).unwrap());
        assert!(f.predict_adverse(&[1.0, 2.0]).is_err());
        let f = fits(vec![0.0, 1.0], vec![0.0, 0.0, 0.0]);
        assert!(f.predict_adverse(&[40.0]).unwrap() >= 1.0 - 1e-16);
    }

    #[test]
    fn prior_layout() {
        let p = OutcomePriors::<f64>::ridge();
        let s = p.death_set(2, 3);
        assert_eq!(s.len(), 7);
        assert_eq!(s.0[0], CoefficientPrior::Flat);
        assert_eq!(
            s.0[1],
            CoefficientPrior::Normal {
                location: 0.0,
                sd: 8.0
            }
        );
        assert_eq!(
            s.0[3],
            CoefficientPrior::Normal {
                location: 0.0,
                sd: 3.0
            }
        );
        assert_eq!(
            s.0[6],
            CoefficientPrior::Normal {
                location: 0.0,
                sd: 8.0
            }
        );
        let c = OutcomePriors::<f64>::cauchy().adverse_set(1, 1);
        assert!(c
            .0
            .iter()
            .all(|p| matches!(p, CoefficientPrior::Cauchy { .. })));
    }

    #[test]
    fn zero_deaths_among_events_stays_finite() {
        let x = DMatrix::from_fn(40, 1, |i, _| (i as f64 / 10.0).sin());
        let a: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 0)).collect();
        let d: Vec<u8> = (0..40).map(|i| u8::from(i % 3 == 1)).collect();
        let f = fit_arm_models(
            1,
            &x,
            &a,
            &d,
            1,
            &OutcomePriors::cauchy(),
            LinkFunction::Logit,
        )
        .unwrap();
        assert!(f.eta().is_finite() && f.eta() < 0.0);
    }
}
