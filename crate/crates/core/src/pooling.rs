//! Rubin's combining rules, the Barnard-Rubin degrees of freedom and
//! percentile intervals over imputations.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::design::{quantile_sorted, sorted_copy};
use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, to_f64, Real};

/// Fewer draws than this trigger a warning for percentile intervals.
pub const MIN_PERCENTILE_DRAWS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolMethod {
    RubinT,
    BarnardRubinT,
    Percentile,
}

impl PoolMethod {
    pub fn name(self) -> &'static str {
        match self {
            PoolMethod::RubinT => "rubin_t",
            PoolMethod::BarnardRubinT => "barnard_rubin_t",
            PoolMethod::Percentile => "percentile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledResult<T> {
    pub point: T,
    pub within_var: T,
    pub between_var: T,
    pub total_var: T,
    /// `None` means infinite degrees of freedom (normal reference).
    pub df: Option<T>,
    pub lo: T,
    pub hi: T,
    pub method: PoolMethod,
    /// Set when the total variance is zero and the interval collapses.
    pub degenerate: bool,
}

impl<T: Real> PooledResult<T> {
    pub fn se(&self) -> T {
        self.total_var.sqrt()
    }
}

fn mean_and_between<T: Real>(xs: &[T]) -> (T, T) {
    let m = lit::<T>(xs.len() as f64);
    let mean = xs.iter().fold(T::zero(), |s, &x| s + x) / m;
    let ss = xs
        .iter()
        .fold(T::zero(), |s, &x| s + (x - mean) * (x - mean));
    (mean, ss / (m - T::one()))
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvalidConfig(format!(
            "alpha must lie in (0, 1), got {alpha:?}"
        )));
    }
    Ok(())
}

/// Upper `1 - alpha / 2` quantile of a t distribution (normal when `df` is
/// `None`).
pub fn critical_value(df: Option<f64>, alpha: f64) -> f64 {
    let p = 1.0 - alpha / 2.0;
    match df {
        Some(nu) if nu.is_finite() => StudentsT::new(0.0, 1.0, nu)
            .expect("positive degrees of freedom")
            .inverse_cdf(p),
        _ => Normal::standard().inverse_cdf(p),
    }
}

/// Combine `M >= 2` estimates and their within-imputation variances.
///
/// With `nu_com` the Barnard-Rubin small-sample degrees of freedom are used
/// whenever the observed-data degrees of freedom are positive; otherwise
/// `nu_M = (M - 1) (T / ((1 + 1/M) B))^2`.
pub fn rubin_pool<T: Real>(
    estimates: &[T],
    variances: &[T],
    alpha: T,
    nu_com: Option<T>,
) -> Result<PooledResult<T>> {
    let m = estimates.len();
    if m < 2 {
        return Err(Error::InvalidConfig(format!(
            "pooling needs at least 2 imputations, got {m}"
        )));
    }
    if variances.len() != m {
        return Err(Error::InvalidInput(format!(
            "{} variances for {m} estimates",
            variances.len()
        )));
    }
    check_alpha(alpha)?;
    if estimates.iter().any(|&x| !is_finite(x)) {
        return Err(Error::InvalidInput("estimates must be finite".into()));
    }
    if variances.iter().any(|&v| !is_finite(v) || v < T::zero()) {
        return Err(Error::InvalidInput(
            "variances must be finite and non-negative".into(),
        ));
    }
    if let Some(nc) = nu_com {
        if !(nc > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "complete-data degrees of freedom must be positive, got {nc:?}"
            )));
        }
    }
    let mm = lit::<T>(m as f64);
    let (point, between) = mean_and_between(estimates);
    let within = variances.iter().fold(T::zero(), |s, &v| s + v) / mm;
    let inflation = T::one() + T::one() / mm;
    let total = within + inflation * between;

    let nu_m = (between > T::zero()).then(|| {
        let r = total / (inflation * between);
        (mm - T::one()) * r * r
    });
    let nu_obs = nu_com.map(|nc| {
        let gamma = if total > T::zero() {
            inflation * between / total
        } else {
            T::zero()
        };
        let three = lit::<T>(3.0);
        (nc + T::one()) / (nc + three) * nc * (T::one() - gamma)
    });
    let (df, method) = match nu_obs {
        Some(obs) if obs > T::zero() => {
            let df = match nu_m {
                Some(nm) => T::one() / (T::one() / nm + T::one() / obs),
                None => obs,
            };
            (Some(df), PoolMethod::BarnardRubinT)
        }
        _ => (nu_m, PoolMethod::RubinT),
    };

    let degenerate = !(total > T::zero());
    let half = if degenerate {
        T::zero()
    } else {
        lit::<T>(critical_value(df.map(to_f64), to_f64(alpha))) * total.sqrt()
    };
    Ok(PooledResult {
        point,
        within_var: within,
        between_var: between,
        total_var: total,
        df,
        lo: point - half,
        hi: point + half,
        method,
        degenerate,
    })
}

/// Empirical `alpha / 2` and `1 - alpha / 2` quantiles (linear
/// interpolation).
pub fn percentile_interval<T: Real>(draws: &[T], alpha: T) -> Result<(T, T)> {
    if draws.len() < 2 {
        return Err(Error::InvalidInput(
            "percentile interval needs at least 2 draws".into(),
        ));
    }
    check_alpha(alpha)?;
    if draws.iter().any(|&x| !is_finite(x)) {
        return Err(Error::InvalidInput("draws must be finite".into()));
    }
    if draws.len() < MIN_PERCENTILE_DRAWS {
        log::warn!(
            "percentile interval from only {} draws is unreliable",
            draws.len()
        );
    }
    let sorted = sorted_copy(draws);
    let half = alpha / lit(2.0);
    Ok((
        quantile_sorted(&sorted, half),
        quantile_sorted(&sorted, T::one() - half),
    ))
}

/// Rubin point and variance summaries with a percentile interval.
pub fn percentile_pool<T: Real>(draws: &[T], variances: &[T], alpha: T) -> Result<PooledResult<T>> {
    let base = rubin_pool(draws, variances, alpha, None)?;
    let (lo, hi) = percentile_interval(draws, alpha)?;
    Ok(PooledResult {
        lo,
        hi,
        method: PoolMethod::Percentile,
        ..base
    })
}
