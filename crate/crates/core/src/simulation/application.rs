use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::pool::{raw_covariate_pool, POOL_COLUMNS, POOL_SIZE};
use crate::cohort::{standardize_columns, Cohort};
use crate::error::Result;
use crate::glm::sigmoid;

/// Seed of the shipped application analogue.
pub const APPLICATION_SEED: u64 = 20_180_601;

/// Targets for the analogue: adverse-event rate by arm and a common death
/// rate.
pub const APPLICATION_ADVERSE_RATE: [f64; 2] = [0.06, 0.08];
pub const APPLICATION_DEATH_RATE: f64 = 0.27;

const XI_A: [f64; 5] = [0.20, -0.15, 0.10, 0.30, 0.25];
const XI_D: [f64; 5] = [0.25, -0.35, 0.15, 0.10, 0.05];
const ZETA: f64 = 0.8;

/// Intercept `b` with `mean_i f(b + offset_i) = target`, by bisection.
fn calibrate(offsets: &[f64], target: f64, f: impl Fn(f64, usize) -> f64) -> f64 {
    let (mut lo, mut hi) = (-15.0f64, 15.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let mean = (0..offsets.len()).map(|i| f(mid, i)).sum::<f64>() / offsets.len() as f64;
        if mean < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A matched two-arm cohort shaped like the nursing-home study: equal arm
/// sizes, balanced covariates on their natural scales, adverse events in
/// 6-8% of residents and deaths in 27% under both drugs, so the death
/// effect is null and the adverse-event effect is small.
pub fn application_analogue(seed: u64) -> Result<Cohort> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = raw_covariate_pool(POOL_SIZE, seed);
    let names: Vec<String> = POOL_COLUMNS.iter().map(|s| s.to_string()).collect();
    let mut z = raw.clone();
    standardize_columns(&mut z, &names);
    let n = raw.nrows();
    let mut w: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
    w.shuffle(&mut rng);
    let lin = |xi: &[f64; 5], i: usize| (0..5).map(|j| xi[j] * z[(i, j)]).sum::<f64>();
    let off_a: Vec<f64> = (0..n).map(|i| lin(&XI_A, i)).collect();
    let off_d: Vec<f64> = (0..n).map(|i| lin(&XI_D, i)).collect();
    let mut a = vec![0u8; n];
    let mut d = vec![0u8; n];
    for arm in [0u8, 1] {
        let phi_a = calibrate(
            &off_a,
            APPLICATION_ADVERSE_RATE[usize::from(arm)],
            |b, i| sigmoid(b + off_a[i]),
        );
        let pa = |i: usize| sigmoid(phi_a + off_a[i]);
        let phi_d = calibrate(&off_d, APPLICATION_DEATH_RATE, |b, i| {
            pa(i) * sigmoid(b + off_d[i] + ZETA) + (1.0 - pa(i)) * sigmoid(b + off_d[i])
        });
        for i in (0..n).filter(|&i| w[i] == arm) {
            a[i] = u8::from(rng.random::<f64>() < pa(i));
            let eta = phi_d + off_d[i] + ZETA * f64::from(a[i]);
            d[i] = u8::from(rng.random::<f64>() < sigmoid(eta));
        }
    }
    let mut cohort = Cohort::new(w, a, d, raw)?;
    cohort.ids = (1..=n).map(|i| format!("r{i:04}")).collect();
    cohort.covariate_names = names;
    Ok(cohort)
}
