use nalgebra::DMatrix;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{AlphaSpec, SimulationConfig};
use crate::cohort::Cohort;
use crate::error::{Error, Result};

/// Both potential outcomes of every unit. Kept apart from the observed
/// cohort so estimators never see them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PotentialOutcomes {
    pub a0: Vec<u8>,
    pub a1: Vec<u8>,
    pub d0: Vec<u8>,
    pub d1: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct SimulatedCohort {
    pub cohort: Cohort,
    pub truth: PotentialOutcomes,
    pub alpha: Vec<f64>,
}

fn dot(a: &[f64], x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

/// `(P(A(w)), P(D(w) | A = 0), P(D(w) | A = 1))` for one covariate row.
pub fn arm_probabilities(config: &SimulationConfig, w: u8, x: &[f64]) -> (f64, f64, f64) {
    let p = config.arm(w);
    let u = |eta: f64| config.link.inverse_unchecked(eta);
    let base_d = p.phi_d + dot(&p.xi_d, x);
    (u(p.phi_a + dot(&p.xi_a, x)), u(base_d), u(base_d + p.zeta))
}

/// Rows of the pool used for a cohort of size `n`: the pool itself when the
/// sizes match, a sample without replacement when the pool is larger, with
/// replacement otherwise.
pub fn select_covariates<R: Rng>(pool: &DMatrix<f64>, n: usize, rng: &mut R) -> DMatrix<f64> {
    let rows = pool.nrows();
    if n == rows {
        return pool.clone();
    }
    let idx: Vec<usize> = if n < rows {
        sample_indices(rng, rows, n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..rows)).collect()
    };
    pool.select_rows(&idx)
}

/// Simulate assignment and both potential outcomes for every unit.
pub fn generate_dataset(
    config: &SimulationConfig,
    pool: &DMatrix<f64>,
    seed: u64,
) -> Result<SimulatedCohort> {
    config.validate()?;
    if pool.ncols() != config.n_covariates() {
        return Err(Error::InvalidConfig(format!(
            "covariate pool has {} columns, parameters expect {}",
            pool.ncols(),
            config.n_covariates()
        )));
    }
    if pool.nrows() == 0 {
        return Err(Error::InvalidConfig("covariate pool is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha = match &config.alpha {
        AlphaSpec::Fixed(a) => a.clone(),
        AlphaSpec::Resample(_) => (0..config.n_covariates())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect(),
    };
    let x = select_covariates(pool, config.n, &mut rng);
    let n = config.n;
    let (mut w, mut a, mut d) = (vec![0u8; n], vec![0u8; n], vec![0u8; n]);
    let mut truth = PotentialOutcomes {
        a0: vec![0; n],
        a1: vec![0; n],
        d0: vec![0; n],
        d1: vec![0; n],
    };
    let bern = |p: f64, rng: &mut ChaCha8Rng| u8::from(rng.random::<f64>() < p);
    for i in 0..n {
        let row: Vec<f64> = x.row(i).iter().copied().collect();
        w[i] = bern(config.link.inverse_unchecked(dot(&alpha, &row)), &mut rng);
        for arm in [1u8, 0] {
            let (pa, pd0, pd1) = arm_probabilities(config, arm, &row);
            let ai = bern(pa, &mut rng);
            let di = bern(if ai == 1 { pd1 } else { pd0 }, &mut rng);
            if arm == 1 {
                truth.a1[i] = ai;
                truth.d1[i] = di;
            } else {
                truth.a0[i] = ai;
                truth.d0[i] = di;
            }
        }
        let (ai, di) = if w[i] == 1 {
            (truth.a1[i], truth.d1[i])
        } else {
            (truth.a0[i], truth.d0[i])
        };
        a[i] = ai;
        d[i] = di;
    }
    let cohort = Cohort::new(w, a, d, x)?;
    Ok(SimulatedCohort {
        cohort,
        truth,
        alpha,
    })
}
