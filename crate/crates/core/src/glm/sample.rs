use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fit::ModelFit;
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

/// Relative tolerance for negative eigenvalues of a covariance matrix.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Multivariate-normal sampler around a MAP estimate.
#[derive(Debug, Clone)]
pub struct PosteriorSampler<T: Real> {
    mean: DVector<T>,
    factor: DMatrix<T>,
}

impl<T: Real> PosteriorSampler<T> {
    /// Requires a converged fit.
    pub fn new(fit: &ModelFit<T>) -> Result<Self> {
        if !fit.converged {
            return Err(Error::Numerical(
                "refusing to sample from an unconverged fit".into(),
            ));
        }
        Self::new_unchecked(fit)
    }

    /// Skips the convergence check.
    pub fn new_unchecked(fit: &ModelFit<T>) -> Result<Self> {
        Self::from_moments(fit.coefficients.clone(), &fit.covariance)
    }

    pub fn from_moments(mean: DVector<T>, covariance: &DMatrix<T>) -> Result<Self> {
        let p = mean.len();
        if covariance.nrows() != p || covariance.ncols() != p {
            return Err(Error::InvalidInput(format!(
                "covariance is {}x{} for {} coefficients",
                covariance.nrows(),
                covariance.ncols(),
                p
            )));
        }
        let factor = match covariance.clone().cholesky() {
            Some(ch) => ch.l(),
            None => psd_root(covariance)?,
        };
        Ok(PosteriorSampler { mean, factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        let p = self.mean.len();
        let z = DVector::<T>::from_fn(p, |_, _| lit(rng.sample::<f64, _>(StandardNormal)));
        &self.mean + &self.factor * z
    }
}

/// `V diag(sqrt(max(l, 0)))` for a symmetric PSD matrix.
fn psd_root<T: Real>(cov: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig
        .eigenvalues
        .iter()
        .fold(0.0f64, |a, b| a.max(to_f64(*b).abs()));
    let min = eig
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, b| a.min(to_f64(*b)));
    if min < -PSD_TOLERANCE * max.max(1.0) {
        return Err(Error::Numerical(format!(
            "covariance is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// `count` i.i.d. draws (rows) from `N(fit.coefficients, fit.covariance)`.
pub fn sample_posterior<T: Real>(fit: &ModelFit<T>, count: usize, seed: u64) -> Result<DMatrix<T>> {
    if count == 0 {
        return Err(Error::InvalidInput("draw count must be at least 1".into()));
    }
    let sampler = PosteriorSampler::new(fit)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = sampler.dim();
    let mut out = DMatrix::<T>::zeros(count, p);
    for r in 0..count {
        let d = sampler.draw(&mut rng);
        for c in 0..p {
            out[(r, c)] = d[c];
        }
    }
    Ok(out)
}
