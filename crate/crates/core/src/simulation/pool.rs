use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::cohort::standardize_columns;

/// Rows in the shipped covariate pool.
pub const POOL_SIZE: usize = 2016;

/// Seed of the shipped covariate pool.
pub const POOL_SEED: u64 = 20_160_515;

pub const POOL_COLUMNS: [&str; 5] = [
    "comorbidities",
    "adl_score",
    "diuretic_days",
    "skin_treatment",
    "hypertension",
];

/// Synthetic nursing-home style covariates: comorbidity count (Poisson, mean
/// 4), activities-of-daily-living score (normal, mean 16, SD 6, rounded and
/// clamped to 0..=28), diuretic days per week (zero for 55%, otherwise
/// uniform on 1..=7), skin-condition treatment (15%) and hypertension (80%).
/// The three continuous columns are standardized.
pub fn synthetic_covariate_pool(n: usize, seed: u64) -> DMatrix<f64> {
    let mut x = raw_covariate_pool(n, seed);
    let names: Vec<String> = POOL_COLUMNS.iter().map(|s| s.to_string()).collect();
    standardize_columns(&mut x, &names);
    x
}

/// The same covariates on their natural scales.
pub fn raw_covariate_pool(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comorb = Poisson::<f64>::new(4.0).expect("valid rate");
    let adl = Normal::<f64>::new(16.0, 6.0).expect("valid sd");
    let mut x = DMatrix::<f64>::zeros(n, 5);
    for i in 0..n {
        x[(i, 0)] = comorb.sample(&mut rng);
        x[(i, 1)] = adl.sample(&mut rng).round().clamp(0.0, 28.0);
        x[(i, 2)] = if rng.random::<f64>() < 0.55 {
            0.0
        } else {
            f64::from(rng.random_range(1..=7u8))
        };
        x[(i, 3)] = f64::from(u8::from(rng.random::<f64>() < 0.15));
        x[(i, 4)] = f64::from(u8::from(rng.random::<f64>() < 0.80));
    }
    x
}

/// The pool shipped with the simulation case studies.
pub fn default_covariate_pool() -> DMatrix<f64> {
    synthetic_covariate_pool(POOL_SIZE, POOL_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marginals() {
        let x = default_covariate_pool();
        assert_eq!(x.shape(), (POOL_SIZE, 5));
        for j in 0..3 {
            let m = x.column(j).mean();
            assert!(m.abs() < 1e-12);
        }
        let skin = x.column(3).mean();
        let hyp = x.column(4).mean();
        assert!((skin - 0.15).abs() < 0.03, "{skin}");
        assert!((hyp - 0.80).abs() < 0.03, "{hyp}");
        assert_eq!(default_covariate_pool(), x);
    }
}
