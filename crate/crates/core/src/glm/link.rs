use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// Inverse-link family for a Bernoulli response.
///
/// `Burr { c }` has inverse link `F_c(x) = 1 - (1 + e^x)^(-c)`; `c = 1` is the
/// logistic distribution function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkFunction<T> {
    #[default]
    Logit,
    Burr {
        c: T,
    },
}

/// Per-observation log-likelihood and its first two derivatives with respect
/// to the linear predictor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BernoulliTerms<T> {
    pub loglik: T,
    pub d1: T,
    pub d2: T,
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<T: Real>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `1 / (1 + e^-x)` without overflow.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `ln(p / (1 - p))`.
#[inline]
pub fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

impl<T: Real> LinkFunction<T> {
    pub fn burr(c: T) -> Result<Self> {
        if !(c > T::zero()) || !is_finite(c) {
            return Err(Error::InvalidInput(format!(
                "Burr shape must be positive and finite, got {c:?}"
            )));
        }
        Ok(LinkFunction::Burr { c })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LinkFunction::Logit => Ok(()),
            LinkFunction::Burr { c } => Self::burr(c).map(|_| ()),
        }
    }

    /// Inverse link with input validation.
    pub fn inverse(&self, x: T) -> Result<T> {
        if !is_finite(x) {
            return Err(Error::InvalidInput(format!(
                "linear predictor must be finite, got {x:?}"
            )));
        }
        self.validate()?;
        Ok(self.inverse_unchecked(x))
    }

    /// Inverse link for a finite predictor and validated link.
    #[inline]
    pub fn inverse_unchecked(&self, x: T) -> T {
        match *self {
            LinkFunction::Logit => sigmoid(x),
            LinkFunction::Burr { c } => -(-(c * softplus(x))).exp_m1(),
        }
    }

    /// Log-likelihood of `y` at predictor `x`, with derivatives in `x`.
    pub(crate) fn bernoulli_terms(&self, x: T, y: bool) -> BernoulliTerms<T> {
        match *self {
            LinkFunction::Logit => {
                let s = sigmoid(x);
                let d2 = -s * (T::one() - s);
                if y {
                    BernoulliTerms {
                        loglik: -softplus(-x),
                        d1: T::one() - s,
                        d2,
                    }
                } else {
                    BernoulliTerms {
                        loglik: -softplus(x),
                        d1: -s,
                        d2,
                    }
                }
            }
            LinkFunction::Burr { c } => {
                let sig = sigmoid(x);
                let s1 = c * sig;
                let s2 = c * sig * (T::one() - sig);
                if y {
                    // ln F = ln(1 - e^{-s}), s = c * softplus(x)
                    let s = c * softplus(x);
                    let em1 = s.exp_m1();
                    let r = if s > lit(30.0) {
                        (-s).exp()
                    } else {
                        T::one() / em1
                    };
                    let loglik = if s > lit(30.0) {
                        -(-s).exp()
                    } else {
                        (-(-s).exp_m1()).ln()
                    };
                    BernoulliTerms {
                        loglik,
                        d1: s1 * r,
                        d2: s2 * r - s1 * s1 * (r + r * r),
                    }
                } else {
                    BernoulliTerms {
                        loglik: -c * softplus(x),
                        d1: -s1,
                        d2: -s2,
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn logit_and_burr_at_zero() {
        assert_abs_diff_eq!(
            LinkFunction::Logit.inverse(0.0).unwrap(),
            0.5,
            epsilon = 1e-15
        );
        let b1 = LinkFunction::burr(1.0).unwrap();
        assert_abs_diff_eq!(b1.inverse(0.0).unwrap(), 0.5, epsilon = 1e-15);
        let b = LinkFunction::burr(0.5).unwrap();
        assert_abs_diff_eq!(
            b.inverse(0.0).unwrap(),
            1.0 - 2f64.powf(-0.5),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(b.inverse(0.0).unwrap(), 0.292893, epsilon = 1e-6);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(LinkFunction::Logit.inverse(f64::NAN).is_err());
        assert!(LinkFunction::Logit.inverse(f64::INFINITY).is_err());
        assert!(LinkFunction::burr(-1.0).is_err());
    }

    #[test]
    fn saturates_without_overflow() {
        for x in [37.0f64, 500.0, 800.0] {
            let p = LinkFunction::Logit.inverse(x).unwrap();
            assert!((1.0 - 1e-16..=1.0).contains(&p));
            let q = LinkFunction::burr(0.5).unwrap().inverse(x).unwrap();
            assert!(q.is_finite() && q <= 1.0);
        }
        assert!(LinkFunction::Logit.inverse(-800.0).unwrap() >= 0.0);
    }

    #[test]
    fn f32_logit() {
        let p: f32 = LinkFunction::Logit.inverse(0.0f32).unwrap();
        assert_eq!(p, 0.5);
    }

    fn finite_diff_check(link: LinkFunction<f64>, x: f64, y: bool) {
        let h = 1e-5;
        let t = link.bernoulli_terms(x, y);
        let lp = link.bernoulli_terms(x + h, y);
        let lm = link.bernoulli_terms(x - h, y);
        let d1 = (lp.loglik - lm.loglik) / (2.0 * h);
        let d2 = (lp.d1 - lm.d1) / (2.0 * h);
        assert!((d1 - t.d1).abs() < 1e-6 * (1.0 + t.d1.abs()), "d1 {x} {y}");
        assert!((d2 - t.d2).abs() < 1e-5 * (1.0 + t.d2.abs()), "d2 {x} {y}");
        let p = link.inverse_unchecked(x);
        let ll: f64 = if y { p.ln() } else { (1.0 - p).ln() };
        if x.abs() <= 5.0 {
            assert!((ll - t.loglik).abs() < 1e-10 * (1.0 + ll.abs()));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &x in &[-20.0, -3.0, -0.5, 0.0, 0.7, 4.0, 25.0] {
            for y in [false, true] {
                finite_diff_check(LinkFunction::Logit, x, y);
                finite_diff_check(LinkFunction::Burr { c: 0.5 }, x, y);
                finite_diff_check(LinkFunction::Burr { c: 2.0 }, x, y);
            }
        }
    }

    proptest! {
        #[test]
        fn logit_symmetry(x in -50.0f64..50.0) {
            let s = LinkFunction::Logit.inverse(x).unwrap() + LinkFunction::Logit.inverse(-x).unwrap();
            prop_assert!((s - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn burr_one_is_logit(x in -40.0f64..40.0) {
            let a = LinkFunction::Logit.inverse(x).unwrap();
            let b = LinkFunction::Burr { c: 1.0 }.inverse(x).unwrap();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn strictly_increasing(x in -15.0f64..5.0, dx in 1e-3f64..5.0, c in 0.1f64..4.0) {
            for link in [LinkFunction::Logit, LinkFunction::Burr { c }] {
                let a = link.inverse(x).unwrap();
                let b = link.inverse(x + dx).unwrap();
                prop_assert!(b > a);
                prop_assert!(a > 0.0 && a < 1.0);
            }
        }
    }
}
