use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// Smoothing constant for `|x|` in the Laplace penalty.
pub const LAPLACE_SMOOTHING: f64 = 1e-8;

/// Cauchy scale applied to the intercept when the slope prior is Cauchy.
pub const CAUCHY_INTERCEPT_SCALE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    Flat,
    Cauchy,
    RidgeNormal,
    LassoLaplace,
}

/// One prior family applied to every slope coefficient of a model.
///
/// Ridge means `N(location, scale^2 / lambda)`; Lasso means a Laplace law with
/// scale `scale^2 / lambda`. The intercept gets a Cauchy(0, 10) under a Cauchy
/// slope prior and is left flat otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec<T> {
    pub kind: PriorKind,
    pub location: T,
    pub scale: T,
    pub shrinkage_lambda: T,
}

impl<T: Real> PriorSpec<T> {
    pub fn flat() -> Self {
        PriorSpec {
            kind: PriorKind::Flat,
            location: T::zero(),
            scale: T::one(),
            shrinkage_lambda: T::one(),
        }
    }

    pub fn cauchy() -> Self {
        PriorSpec {
            kind: PriorKind::Cauchy,
            location: T::zero(),
            scale: lit(2.5),
            shrinkage_lambda: T::one(),
        }
    }

    pub fn ridge() -> Self {
        PriorSpec {
            kind: PriorKind::RidgeNormal,
            location: T::zero(),
            scale: lit(3.0),
            shrinkage_lambda: T::one(),
        }
    }

    pub fn lasso() -> Self {
        PriorSpec {
            kind: PriorKind::LassoLaplace,
            ..Self::ridge()
        }
    }

    pub fn with_scale(mut self, scale: T) -> Self {
        self.scale = scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > T::zero()) || !is_finite(self.scale) {
            return Err(Error::InvalidConfig(format!(
                "prior scale must be positive, got {:?}",
                self.scale
            )));
        }
        if !(self.shrinkage_lambda > T::zero()) || !is_finite(self.shrinkage_lambda) {
            return Err(Error::InvalidConfig(format!(
                "shrinkage lambda must be positive, got {:?}",
                self.shrinkage_lambda
            )));
        }
        if !is_finite(self.location) {
            return Err(Error::InvalidConfig("prior location must be finite".into()));
        }
        Ok(())
    }

    /// Prior for a slope coefficient.
    pub fn slope(&self) -> CoefficientPrior<T> {
        let loc = self.location;
        match self.kind {
            PriorKind::Flat => CoefficientPrior::Flat,
            PriorKind::Cauchy => CoefficientPrior::Cauchy {
                location: loc,
                scale: self.scale,
            },
            PriorKind::RidgeNormal => CoefficientPrior::Normal {
                location: loc,
                sd: self.scale / self.shrinkage_lambda.sqrt(),
            },
            PriorKind::LassoLaplace => CoefficientPrior::Laplace {
                location: loc,
                scale: self.scale * self.scale / self.shrinkage_lambda,
            },
        }
    }

    pub fn intercept(&self) -> CoefficientPrior<T> {
        match self.kind {
            PriorKind::Cauchy => CoefficientPrior::Cauchy {
                location: T::zero(),
                scale: lit(CAUCHY_INTERCEPT_SCALE),
            },
            _ => CoefficientPrior::Flat,
        }
    }

    /// Expand to one prior per coefficient; `slopes` excludes the intercept.
    pub fn expand(&self, slopes: usize) -> PriorSet<T> {
        let mut v = Vec::with_capacity(slopes + 1);
        v.push(self.intercept());
        v.extend(std::iter::repeat_n(self.slope(), slopes));
        PriorSet(v)
    }
}

/// Independent prior on a single coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CoefficientPrior<T> {
    Flat,
    Cauchy { location: T, scale: T },
    Normal { location: T, sd: T },
    Laplace { location: T, scale: T },
}

impl<T: Real> CoefficientPrior<T> {
    pub fn is_proper(&self) -> bool {
        !matches!(self, CoefficientPrior::Flat)
    }

    /// Log-density up to an additive constant, with first and second
    /// derivatives.
    pub(crate) fn terms(&self, beta: T) -> (T, T, T) {
        match *self {
            CoefficientPrior::Flat => (T::zero(), T::zero(), T::zero()),
            CoefficientPrior::Cauchy { location, scale } => {
                let d = beta - location;
                let s2 = scale * scale;
                let q = s2 + d * d;
                let two = lit::<T>(2.0);
                (-(q / s2).ln(), -two * d / q, -two * (s2 - d * d) / (q * q))
            }
            CoefficientPrior::Normal { location, sd } => {
                let d = beta - location;
                let v = sd * sd;
                (-d * d / (lit::<T>(2.0) * v), -d / v, -T::one() / v)
            }
            CoefficientPrior::Laplace { location, scale } => {
                let d = beta - location;
                let eps = lit::<T>(LAPLACE_SMOOTHING);
                let r = (d * d + eps * eps).sqrt();
                (
                    -r / scale,
                    -d / (scale * r),
                    -(eps * eps) / (scale * r * r * r),
                )
            }
        }
    }
}

/// Per-coefficient priors; index 0 is the intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSet<T>(pub Vec<CoefficientPrior<T>>);

impl<T: Real> PriorSet<T> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_flat(&self) -> bool {
        self.0.iter().any(|p| !p.is_proper())
    }

    pub fn push(&mut self, p: CoefficientPrior<T>) {
        self.0.push(p);
    }

    pub fn extend_with(mut self, p: CoefficientPrior<T>, count: usize) -> Self {
        self.0.extend(std::iter::repeat_n(p, count));
        self
    }

    /// Divide each slope prior's scale by the spread of its design column:
    /// the range for two-valued columns, twice the sample SD otherwise.
    /// Constant columns and the intercept are left alone.
    pub fn scaled_to(mut self, design: &DMatrix<T>) -> Self {
        for (j, col) in design.column_iter().enumerate() {
            let Some(prior) = self.0.get_mut(j + 1) else {
                break;
            };
            let s = column_spread(col.iter().copied());
            if !(s > T::zero()) {
                continue;
            }
            *prior = match *prior {
                CoefficientPrior::Flat => CoefficientPrior::Flat,
                CoefficientPrior::Cauchy { location, scale } => CoefficientPrior::Cauchy {
                    location,
                    scale: scale / s,
                },
                CoefficientPrior::Normal { location, sd } => CoefficientPrior::Normal {
                    location,
                    sd: sd / s,
                },
                CoefficientPrior::Laplace { location, scale } => CoefficientPrior::Laplace {
                    location,
                    scale: scale / s,
                },
            };
        }
        self
    }
}

fn column_spread<T: Real>(xs: impl Iterator<Item = T> + Clone) -> T {
    let mut first: Option<T> = None;
    let mut second: Option<T> = None;
    let mut many = false;
    for x in xs.clone() {
        match (first, second) {
            (None, _) => first = Some(x),
            (Some(a), None) if x != a => second = Some(x),
            (Some(a), Some(b)) if x != a && x != b => {
                many = true;
                break;
            }
            _ => {}
        }
    }
    match (first, second, many) {
        (Some(a), Some(b), false) => (a - b).abs(),
        (_, _, true) => {
            let n = lit::<T>(xs.clone().count() as f64);
            let mean = xs.clone().fold(T::zero(), |s, x| s + x) / n;
            let ss = xs.fold(T::zero(), |s, x| s + (x - mean) * (x - mean));
            lit::<T>(2.0) * (ss / (n - T::one())).sqrt()
        }
        _ => T::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ridge_variance_uses_lambda() {
        let p = PriorSpec {
            shrinkage_lambda: 4.0,
            ..PriorSpec::<f64>::ridge()
        };
        match p.slope() {
            CoefficientPrior::Normal { sd, .. } => assert!((sd - 1.5).abs() < 1e-15),
            _ => unreachable!(),
        }
        assert_eq!(p.intercept(), CoefficientPrior::Flat);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(PriorSpec::<f64>::cauchy()
            .with_scale(0.0)
            .validate()
            .is_err());
        let bad = PriorSpec {
            shrinkage_lambda: -1.0,
            ..PriorSpec::<f64>::ridge()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scaling_by_column_spread() {
        let x = DMatrix::from_row_slice(
            4,
            3,
            &[0.0, 1.0, 5.0, 1.0, 2.0, 5.0, 0.0, 3.0, 5.0, 1.0, 4.0, 5.0],
        );
        let set = PriorSpec::<f64>::cauchy().expand(3).scaled_to(&x);
        assert_eq!(set.0[0], PriorSpec::cauchy().intercept());
        let sd = (5.0f64 / 3.0).sqrt();
        let scales: Vec<f64> = set.0[1..]
            .iter()
            .map(|p| match p {
                CoefficientPrior::Cauchy { scale, .. } => *scale,
                _ => unreachable!(),
            })
            .collect();
        assert!((scales[0] - 2.5).abs() < 1e-15);
        assert!((scales[1] - 2.5 / (2.0 * sd)).abs() < 1e-12);
        assert_eq!(scales[2], 2.5);
    }

    #[test]
    fn prior_derivatives() {
        let h = 1e-5;
        for prior in [
            CoefficientPrior::<f64>::Cauchy {
                location: 0.3,
                scale: 2.5,
            },
            CoefficientPrior::Normal {
                location: -1.0,
                sd: 3.0,
            },
            CoefficientPrior::Laplace {
                location: 0.0,
                scale: 9.0,
            },
        ] {
            for &b in &[-4.0f64, -0.2, 0.9, 6.0] {
                let (_, g, hss) = prior.terms(b);
                let (lp, gp, _) = prior.terms(b + h);
                let (lm, gm, _) = prior.terms(b - h);
                assert!(((lp - lm) / (2.0 * h) - g).abs() < 1e-7);
                assert!(((gp - gm) / (2.0 * h) - hss).abs() < 1e-6);
            }
        }
    }
}
