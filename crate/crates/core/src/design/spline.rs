use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::quantile::quantile_sorted;
use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// Natural cubic spline basis without intercept.
///
/// Built from the clamped cubic B-spline basis on
/// `[a, a, a, a, t_1, .., t_K, b, b, b, b]`, dropping the first B-spline and
/// projecting onto the null space of the second-derivative constraints at
/// `a` and `b`. The result has `K + 1` columns, one of which is equivalent to
/// the linear term, and is extended linearly outside `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct SplineBasis<T: Real> {
    pub internal_knots: Vec<T>,
    pub boundary_knots: (T, T),
    /// `(K + 3) x (K + 1)` map from B-splines `2..K+4` to the natural basis.
    transform: DMatrix<T>,
}

impl<T: Real> SplineBasis<T> {
    /// Internal knots must be strictly increasing and strictly inside the
    /// boundary knots. Equal boundary knots give an empty basis.
    pub fn from_knots(internal: &[T], boundary: (T, T)) -> Result<Self> {
        let (a, b) = boundary;
        if !is_finite(a) || !is_finite(b) || b < a {
            return Err(Error::InvalidInput(format!(
                "boundary knots ({a:?}, {b:?}) must be finite and ordered"
            )));
        }
        if internal.iter().any(|&t| !is_finite(t)) {
            return Err(Error::InvalidInput("internal knots must be finite".into()));
        }
        if internal.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(
                "internal knots must be strictly increasing".into(),
            ));
        }
        if internal.iter().any(|&t| !(t > a && t < b)) {
            return Err(Error::InvalidInput(
                "internal knots must lie strictly inside the boundary knots".into(),
            ));
        }
        if a == b {
            return Ok(SplineBasis {
                internal_knots: Vec::new(),
                boundary_knots: boundary,
                transform: DMatrix::zeros(0, 0),
            });
        }
        let mut basis = SplineBasis {
            internal_knots: internal.to_vec(),
            boundary_knots: boundary,
            transform: DMatrix::zeros(0, 0),
        };
        let m = internal.len() + 3;
        let mut constraint = DMatrix::<T>::zeros(m, 2);
        for (c, x) in [a, b].into_iter().enumerate() {
            let d2 = basis.bspline_derivs(x).2;
            for r in 0..m {
                constraint[(r, c)] = d2[r + 1];
            }
        }
        let qr = constraint.qr();
        let mut q_t = DMatrix::<T>::identity(m, m);
        qr.q_tr_mul(&mut q_t);
        let q = q_t.transpose();
        basis.transform = q.columns(2, m - 2).into_owned();
        Ok(basis)
    }

    pub fn basis_dim(&self) -> usize {
        self.transform.ncols()
    }

    fn knot_vector(&self) -> Vec<T> {
        let (a, b) = self.boundary_knots;
        let mut t = vec![a; 4];
        t.extend_from_slice(&self.internal_knots);
        t.extend(std::iter::repeat_n(b, 4));
        t
    }

    /// Values, first and second derivatives of all `K + 4` cubic B-splines
    /// at `x` in `[a, b]`.
    fn bspline_derivs(&self, x: T) -> (Vec<T>, Vec<T>, Vec<T>) {
        let t = self.knot_vector();
        let nk = t.len();
        // Degree-0 indicator on the span containing x; the right end belongs
        // to the last non-empty span.
        let mut b0 = vec![T::zero(); nk - 1];
        let last = (0..nk - 1).rev().find(|&i| t[i] < t[i + 1]).unwrap_or(0);
        let span = (0..nk - 1)
            .find(|&i| t[i] <= x && x < t[i + 1])
            .unwrap_or(last);
        b0[span] = T::one();

        let ratio = |num: T, den: T| {
            if den > T::zero() {
                num / den
            } else {
                T::zero()
            }
        };
        let mut levels = vec![b0];
        for d in 1..=3 {
            let prev = &levels[d - 1];
            let cur: Vec<T> = (0..nk - 1 - d)
                .map(|i| {
                    ratio(x - t[i], t[i + d] - t[i]) * prev[i]
                        + ratio(t[i + d + 1] - x, t[i + d + 1] - t[i + 1]) * prev[i + 1]
                })
                .collect();
            levels.push(cur);
        }
        let deriv = |lower: &[T], d: usize| -> Vec<T> {
            let dd = lit::<T>(d as f64);
            (0..nk - 1 - d)
                .map(|i| {
                    dd * (ratio(lower[i], t[i + d] - t[i])
                        - ratio(lower[i + 1], t[i + d + 1] - t[i + 1]))
                })
                .collect()
        };
        let d1_deg2 = deriv(&levels[1], 2);
        let d1 = deriv(&levels[2], 3);
        let d2 = deriv(&d1_deg2, 3);
        (levels[3].clone(), d1, d2)
    }

    /// Basis row at `x`.
    pub fn evaluate(&self, x: T) -> Vec<T> {
        let k = self.basis_dim();
        if k == 0 {
            return Vec::new();
        }
        let (a, b) = self.boundary_knots;
        let (anchor, offset) = if x < a {
            (a, x - a)
        } else if x > b {
            (b, x - b)
        } else {
            (x, T::zero())
        };
        let (v, d1, _) = self.bspline_derivs(anchor);
        let m = self.transform.nrows();
        (0..k)
            .map(|c| {
                let mut s = T::zero();
                for r in 0..m {
                    s += self.transform[(r, c)] * (v[r + 1] + offset * d1[r + 1]);
                }
                s
            })
            .collect()
    }

    pub fn evaluate_matrix(&self, xs: &[T]) -> DMatrix<T> {
        let k = self.basis_dim();
        let mut out = DMatrix::<T>::zeros(xs.len(), k);
        for (i, &x) in xs.iter().enumerate() {
            for (j, v) in self.evaluate(x).into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Internal knots at the `j / (K + 1)` quantiles, deduplicated and kept
/// strictly inside the data range.
pub fn quantile_knots<T: Real>(sorted: &[T], n_internal: usize) -> Vec<T> {
    let (a, b) = (sorted[0], sorted[sorted.len() - 1]);
    let mut knots: Vec<T> = Vec::with_capacity(n_internal);
    for j in 1..=n_internal {
        let q = quantile_sorted(sorted, lit::<T>(j as f64 / (n_internal + 1) as f64));
        if q > a && q < b && knots.last().is_none_or(|&last| q > last) {
            knots.push(q);
        }
    }
    knots
}

/// Natural cubic spline basis on `logit_scores` with quantile knots.
pub fn build_spline_basis<T: Real>(
    logit_scores: &[T],
    n_internal_knots: usize,
) -> Result<(SplineBasis<T>, DMatrix<T>)> {
    let sorted = checked_sorted(logit_scores)?;
    let knots = quantile_knots(&sorted, n_internal_knots);
    finish(logit_scores, &sorted, &knots)
}

/// Natural cubic spline basis with knots at given positions on the logit
/// scale (typically the logits of subclass boundaries). Knots outside the
/// data range or tied with a previous knot are dropped.
pub fn spline_with_knots<T: Real>(
    logit_scores: &[T],
    candidate_knots: &[T],
) -> Result<(SplineBasis<T>, DMatrix<T>)> {
    let sorted = checked_sorted(logit_scores)?;
    let (a, b) = (sorted[0], sorted[sorted.len() - 1]);
    let mut cand: Vec<T> = candidate_knots
        .iter()
        .copied()
        .filter(|&k| is_finite(k))
        .collect();
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut knots: Vec<T> = Vec::with_capacity(cand.len());
    for k in cand {
        if k > a && k < b && knots.last().is_none_or(|&last| k > last) {
            knots.push(k);
        }
    }
    finish(logit_scores, &sorted, &knots)
}

/// Logits of subclass boundaries given on the probability scale.
pub fn logit_knots<T: Real>(boundaries: &[T]) -> Vec<T> {
    boundaries
        .iter()
        .filter(|&&b| b > T::zero() && b < T::one())
        .map(|&b| crate::glm::logit(b))
        .collect()
}

fn checked_sorted<T: Real>(logit_scores: &[T]) -> Result<Vec<T>> {
    if logit_scores.is_empty() {
        return Err(Error::InvalidInput("no scores to build a spline on".into()));
    }
    if logit_scores.iter().any(|&x| !is_finite(x)) {
        return Err(Error::InvalidInput("logit scores must be finite".into()));
    }
    let mut sorted = logit_scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(sorted)
}

fn finish<T: Real>(
    logit_scores: &[T],
    sorted: &[T],
    knots: &[T],
) -> Result<(SplineBasis<T>, DMatrix<T>)> {
    let basis = SplineBasis::from_knots(knots, (sorted[0], sorted[sorted.len() - 1]))?;
    if logit_scores.len() < basis.basis_dim() + 1 {
        return Err(Error::InvalidInput(format!(
            "{} observations cannot support a {}-column spline basis",
            logit_scores.len(),
            basis.basis_dim()
        )));
    }
    let matrix = basis.evaluate_matrix(logit_scores);
    Ok((basis, matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis5() -> SplineBasis<f64> {
        SplineBasis::from_knots(&[-1.5, -0.4, 0.2, 0.9, 1.7], (-3.0, 2.5)).unwrap()
    }

    #[test]
    fn dimension_is_internal_plus_one() {
        assert_eq!(basis5().basis_dim(), 6);
        assert_eq!(
            SplineBasis::from_knots(&[], (0.0, 1.0))
                .unwrap()
                .basis_dim(),
            1
        );
        assert_eq!(
            SplineBasis::from_knots(&[], (1.0, 1.0))
                .unwrap()
                .basis_dim(),
            0
        );
    }

    #[test]
    fn linear_beyond_boundaries() {
        let b = basis5();
        let h = 0.37;
        for &x in &[2.6, 4.0, 11.0, -3.8, -7.5] {
            let (v0, v1, v2) = (b.evaluate(x), b.evaluate(x + h), b.evaluate(x + 2.0 * h));
            for j in 0..b.basis_dim() {
                let second = v2[j] - 2.0 * v1[j] + v0[j];
                assert!(second.abs() < 1e-6 * h * h, "col {j} at {x}: {second}");
            }
        }
    }

    #[test]
    fn smooth_at_knots() {
        let b = basis5();
        let h = 1e-4;
        let mut knots = b.internal_knots.clone();
        knots.extend([-3.0, 2.5]);
        for &k in &knots {
            let f = |x: f64| b.evaluate(x);
            let (lm, l0, lp) = (f(k - 2.0 * h), f(k - h), f(k));
            let (rm, r0, rp) = (f(k), f(k + h), f(k + 2.0 * h));
            for j in 0..b.basis_dim() {
                // one-sided first and second differences agree from each side
                let dl = (lp[j] - l0[j]) / h;
                let dr = (r0[j] - rm[j]) / h;
                assert!((dl - dr).abs() < 1e-3, "first derivative jump at {k}");
                let sl = (lp[j] - 2.0 * l0[j] + lm[j]) / (h * h);
                let sr = (rp[j] - 2.0 * r0[j] + rm[j]) / (h * h);
                assert!((sl - sr).abs() < 1e-2, "second derivative jump at {k}");
            }
        }
    }

    #[test]
    fn build_deduplicates_tied_knots() {
        let mut xs = vec![0.0; 50];
        xs.extend((0..10).map(|i| i as f64 + 1.0));
        let (b, m) = build_spline_basis(&xs, 5).unwrap();
        assert!(b.internal_knots.len() < 5);
        assert_eq!(m.ncols(), b.internal_knots.len() + 1);
    }

    #[test]
    fn too_few_points() {
        assert!(build_spline_basis(&[0.0, 1.0, 2.0], 5).is_err());
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(SplineBasis::from_knots(&[0.5, 0.2], (0.0, 1.0)).is_err());
        assert!(SplineBasis::from_knots(&[1.0], (0.0, 1.0)).is_err());
        assert!(SplineBasis::<f64>::from_knots(&[], (1.0, 0.0)).is_err());
    }
}
