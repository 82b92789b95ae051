use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::link::LinkFunction;
use super::prior::PriorSet;
use crate::error::{Error, Result};
use crate::scalar::{is_finite, lit, Real};

/// MAP estimate of a Bernoulli regression with its Laplace covariance.
///
/// `coefficients[0]` is the intercept; the remaining entries line up with the
/// columns of the design matrix passed to [`fit_map`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de> + Real"))]
pub struct ModelFit<T: Real> {
    pub coefficients: DVector<T>,
    pub covariance: DMatrix<T>,
    pub link: LinkFunction<T>,
    pub converged: bool,
    pub iterations: usize,
    pub log_posterior: T,
    pub gradient_norm: T,
}

impl<T: Real> ModelFit<T> {
    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// A fit with fixed coefficients and zero covariance.
    pub fn point_mass(coefficients: DVector<T>, link: LinkFunction<T>) -> Self {
        let p = coefficients.len();
        ModelFit {
            coefficients,
            covariance: DMatrix::zeros(p, p),
            link,
            converged: true,
            iterations: 0,
            log_posterior: T::zero(),
            gradient_norm: T::zero(),
        }
    }

    /// Linear predictor for a design row that excludes the intercept.
    #[inline]
    pub fn linear_predictor(&self, row: &[T]) -> T {
        linear_predictor(self.coefficients.as_slice(), row)
    }
}

/// `coef[0] + sum(coef[j + 1] * row[j])`.
#[inline]
pub fn linear_predictor<T: Real>(coef: &[T], row: &[T]) -> T {
    debug_assert_eq!(coef.len(), row.len() + 1);
    let mut eta = coef[0];
    for (c, x) in coef[1..].iter().zip(row) {
        eta += *c * *x;
    }
    eta
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<T> {
    pub max_iterations: usize,
    pub gradient_tolerance: T,
}

impl<T: Real> Default for FitOptions<T> {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            gradient_tolerance: T::gradient_tolerance(),
        }
    }
}

/// Value, gradient and negative Hessian of a log-posterior.
#[derive(Debug, Clone)]
pub struct Evaluation<T: Real> {
    pub value: T,
    pub gradient: DVector<T>,
    pub neg_hessian: DMatrix<T>,
}

/// Penalized Bernoulli log-posterior over `[1, design]`.
pub struct LogPosterior<'a, T: Real> {
    rows: Vec<T>,
    p: usize,
    response: Vec<bool>,
    prior: &'a PriorSet<T>,
    link: LinkFunction<T>,
}

impl<'a, T: Real> LogPosterior<'a, T> {
    pub fn new(
        design: &DMatrix<T>,
        response: &[u8],
        prior: &'a PriorSet<T>,
        link: LinkFunction<T>,
    ) -> Result<Self> {
        let n = design.nrows();
        let p = design.ncols() + 1;
        if n == 0 {
            return Err(Error::InvalidInput("design has no rows".into()));
        }
        if response.len() != n {
            return Err(Error::InvalidInput(format!(
                "response length {} does not match {} design rows",
                response.len(),
                n
            )));
        }
        if prior.len() != p {
            return Err(Error::InvalidInput(format!(
                "prior has {} entries for {} coefficients",
                prior.len(),
                p
            )));
        }
        link.validate()?;
        let response = response
            .iter()
            .enumerate()
            .map(|(i, &y)| match y {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::InvalidInput(format!(
                    "response[{i}] = {y} is not binary"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(n * p);
        for i in 0..n {
            rows.push(T::one());
            for j in 0..design.ncols() {
                let x = design[(i, j)];
                if !is_finite(x) {
                    return Err(Error::InvalidInput(format!(
                        "design[{i}, {j}] is not finite"
                    )));
                }
                rows.push(x);
            }
        }
        Ok(LogPosterior {
            rows,
            p,
            response,
            prior,
            link,
        })
    }

    pub fn dim(&self) -> usize {
        self.p
    }

    fn row(&self, i: usize) -> &[T] {
        &self.rows[i * self.p..(i + 1) * self.p]
    }

    fn eta(&self, theta: &[T], i: usize) -> T {
        self.row(i)
            .iter()
            .zip(theta)
            .fold(T::zero(), |acc, (x, b)| acc + *x * *b)
    }

    /// Log-posterior value only.
    pub fn value(&self, theta: &[T]) -> T {
        let mut v = T::zero();
        for (i, &y) in self.response.iter().enumerate() {
            v += self.link.bernoulli_terms(self.eta(theta, i), y).loglik;
        }
        for (b, pr) in theta.iter().zip(&self.prior.0) {
            v += pr.terms(*b).0;
        }
        v
    }

    pub fn evaluate(&self, theta: &[T]) -> Evaluation<T> {
        let p = self.p;
        let mut value = T::zero();
        let mut gradient = DVector::<T>::zeros(p);
        let mut h = DMatrix::<T>::zeros(p, p);
        for (i, &y) in self.response.iter().enumerate() {
            let row = self.row(i);
            let t = self.link.bernoulli_terms(self.eta(theta, i), y);
            value += t.loglik;
            let w = -t.d2;
            for a in 0..p {
                gradient[a] += t.d1 * row[a];
                let wa = w * row[a];
                for b in a..p {
                    h[(a, b)] += wa * row[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
        }
        for (a, (b, pr)) in theta.iter().zip(&self.prior.0).enumerate() {
            let (lv, g, d2) = pr.terms(*b);
            value += lv;
            gradient[a] += g;
            h[(a, a)] -= d2;
        }
        Evaluation {
            value,
            gradient,
            neg_hessian: h,
        }
    }
}

/// Maximum-a-posteriori fit with default options.
pub fn fit_map<T: Real>(
    design: &DMatrix<T>,
    response: &[u8],
    prior: &PriorSet<T>,
    link: LinkFunction<T>,
) -> Result<ModelFit<T>> {
    fit_map_with(design, response, prior, link, &FitOptions::default())
}

/// Newton-Raphson with step halving on the penalized log-posterior.
///
/// The intercept column is added internally. Hitting the iteration cap is not
/// an error (`converged = false`) unless coefficients with flat priors are
/// still diverging, which signals separation.
pub fn fit_map_with<T: Real>(
    design: &DMatrix<T>,
    response: &[u8],
    prior: &PriorSet<T>,
    link: LinkFunction<T>,
    options: &FitOptions<T>,
) -> Result<ModelFit<T>> {
    let post = LogPosterior::new(design, response, prior, link)?;
    let p = post.dim();
    let mut theta = DVector::<T>::zeros(p);
    let mut eval = post.evaluate(theta.as_slice());
    let mut converged = false;
    let mut iterations = 0;
    let mut last_step = T::zero();

    while iterations < options.max_iterations {
        let step = newton_direction(&eval.neg_hessian, &eval.gradient);
        let step = match step {
            Some(s) => s,
            None if prior.has_flat() => {
                return Err(Error::SingularCurvature(
                    "negative Hessian is not positive definite".into(),
                ))
            }
            None => return Err(Error::Numerical("Newton system could not be solved".into())),
        };
        let step_inf = step.amax();
        let theta_inf = theta.amax().max(T::one());
        if eval.gradient.norm() <= options.gradient_tolerance
            && step_inf <= lit::<T>(1e-4) * theta_inf
        {
            converged = true;
            break;
        }
        iterations += 1;
        last_step = step_inf;

        let slack = lit::<T>(1e-13) * (T::one() + eval.value.abs());
        let mut t = T::one();
        let mut accepted = None;
        for _ in 0..40 {
            let cand = &theta + &step * t;
            let v = post.value(cand.as_slice());
            if is_finite(v) && v >= eval.value - slack {
                accepted = Some(cand);
                break;
            }
            t *= lit(0.5);
        }
        match accepted {
            Some(cand) => {
                theta = cand;
                eval = post.evaluate(theta.as_slice());
            }
            None => {
                converged = eval.gradient.norm() <= options.gradient_tolerance;
                break;
            }
        }
    }

    if !converged && prior.has_flat() && last_step > lit(1e-3) {
        let eta_max = (0..response.len())
            .map(|i| post.eta(theta.as_slice(), i).abs())
            .fold(T::zero(), |a, b| a.max(b));
        if eta_max > lit(15.0) {
            return Err(Error::SingularCurvature(
                "coefficients diverge under a flat prior (complete or quasi-complete separation)"
                    .into(),
            ));
        }
    }

    let covariance = invert_curvature(&eval.neg_hessian, prior.has_flat())?;
    Ok(ModelFit {
        gradient_norm: eval.gradient.norm(),
        log_posterior: eval.value,
        coefficients: theta,
        covariance,
        link,
        converged,
        iterations,
    })
}

/// Solve `H d = g`, damping `H` when it is not positive definite.
fn newton_direction<T: Real>(h: &DMatrix<T>, g: &DVector<T>) -> Option<DVector<T>> {
    if let Some(ch) = h.clone().cholesky() {
        return Some(ch.solve(g));
    }
    let p = h.nrows();
    let scale = (0..p)
        .map(|i| h[(i, i)].abs())
        .fold(T::one(), |a, b| a.max(b));
    let mut mu = lit::<T>(1e-8) * scale;
    for _ in 0..30 {
        let damped = h + DMatrix::<T>::identity(p, p) * mu;
        if let Some(ch) = damped.cholesky() {
            return Some(ch.solve(g));
        }
        mu *= lit(10.0);
    }
    None
}

fn invert_curvature<T: Real>(h: &DMatrix<T>, has_flat: bool) -> Result<DMatrix<T>> {
    let p = h.nrows();
    let fail = |msg: String| {
        if has_flat {
            Error::SingularCurvature(msg)
        } else {
            Error::Numerical(msg)
        }
    };
    let eig = SymmetricEigen::new(h.clone());
    let max = eig
        .eigenvalues
        .iter()
        .fold(T::zero(), |a, b| a.max(b.abs()));
    let min = eig
        .eigenvalues
        .iter()
        .fold(T::max_value().unwrap(), |a, b| a.min(*b));
    if !(min > lit::<T>(1e-12) * max) || !(max > T::zero()) {
        return Err(fail(format!(
            "curvature eigenvalues span [{min:?}, {max:?}]"
        )));
    }
    let ch = h
        .clone()
        .cholesky()
        .ok_or_else(|| fail("Cholesky factorization of the curvature failed".into()))?;
    let inv = ch.inverse();
    let mut cov = DMatrix::<T>::zeros(p, p);
    let half = lit::<T>(0.5);
    for a in 0..p {
        for b in 0..p {
            cov[(a, b)] = half * (inv[(a, b)] + inv[(b, a)]);
        }
    }
    Ok(cov)
}
