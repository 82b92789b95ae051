use rand::Rng;
use serde::Serialize;

use super::streams::{stream_rng, Purpose};
use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::glm::PosteriorSampler;
use crate::outcome::{
    adverse_predictor, compose_ordinal, death_predictor, ArmOutcomeFits, OutcomeDesign,
};

/// Below this many replications the check is flagged as unreliable.
pub const MIN_CHECK_DRAWS: usize = 100;

/// Replicated and observed counts of the four ordinal levels in one arm.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveCheck {
    pub arm: u8,
    pub replicated: Vec<[usize; 4]>,
    pub observed: [usize; 4],
    /// Two-sided tail probability of the observed count per level.
    pub tail_probability: [f64; 4],
    pub few_draws: bool,
}

/// Simulate the observed arm's outcomes from posterior draws of its models
/// and compare ordinal-level counts with the data.
pub fn posterior_predictive_check(
    fits: &ArmOutcomeFits<f64>,
    design: &OutcomeDesign,
    cohort: &Cohort,
    draws: usize,
    seed: u64,
) -> Result<PredictiveCheck> {
    if draws == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    let arm = fits.arm;
    let few_draws = draws < MIN_CHECK_DRAWS;
    if few_draws {
        log::warn!("posterior predictive check with only {draws} replications");
    }
    let units = cohort.arm_indices(arm);
    let mut observed = [0usize; 4];
    for &i in &units {
        observed[usize::from(compose_ordinal(cohort.a[i], cohort.d[i]) - 1)] += 1;
    }
    let sa = PosteriorSampler::new_unchecked(&fits.adverse_fit)?;
    let sd = PosteriorSampler::new_unchecked(&fits.death_fit)?;
    let (la, ld) = (fits.adverse_fit.link, fits.death_fit.link);
    let mut replicated = Vec::with_capacity(draws);
    for r in 0..draws {
        let mut rng = stream_rng(seed, r, Purpose::check(arm));
        let ca = sa.draw(&mut rng);
        let cd = sd.draw(&mut rng);
        let mut counts = [0usize; 4];
        for &i in &units {
            let row = design.row(i);
            let a = u8::from(
                rng.random::<f64>() < la.inverse_unchecked(adverse_predictor(ca.as_slice(), row)),
            );
            let d = u8::from(
                rng.random::<f64>() < ld.inverse_unchecked(death_predictor(cd.as_slice(), row, a)),
            );
            counts[usize::from(compose_ordinal(a, d) - 1)] += 1;
        }
        replicated.push(counts);
    }
    let mut tail_probability = [0.0; 4];
    for k in 0..4 {
        let ge = replicated.iter().filter(|c| c[k] >= observed[k]).count() as f64;
        let le = replicated.iter().filter(|c| c[k] <= observed[k]).count() as f64;
        tail_probability[k] = (2.0 * ge.min(le) / draws as f64).min(1.0);
    }
    Ok(PredictiveCheck {
        arm,
        replicated,
        observed,
        tail_probability,
        few_draws,
    })
}
