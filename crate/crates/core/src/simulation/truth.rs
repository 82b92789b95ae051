use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SimulationConfig;
use super::generate::arm_probabilities;
use crate::estimands::{Estimand, EstimandSet, JointOrdinalDistribution, SURVIVOR_MASS_FLOOR};
use crate::glm::ModelFit;
use crate::outcome::{compose_ordinal, ArmOutcomeFits};

/// Probability of `(a, d)` under one arm.
fn outcome_prob(pa: f64, pd0: f64, pd1: f64, a: u8, d: u8) -> f64 {
    let pa_ = if a == 1 { pa } else { 1.0 - pa };
    let pd = if a == 1 { pd1 } else { pd0 };
    pa_ * if d == 1 { pd } else { 1.0 - pd }
}

/// Ground-truth estimands by exhaustive enumeration of the 16 joint outcomes
/// `(A(1), D(1), A(0), D(0))` of every pool unit, with the two arms
/// independent given covariates.
pub fn true_estimands(config: &SimulationConfig, pool: &DMatrix<f64>) -> EstimandSet<f64> {
    let n = pool.nrows() as f64;
    let mut joint = [[0.0f64; 4]; 4];
    let (mut a1, mut a0, mut d1, mut d0, mut c1, mut c0) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut surv, mut surv_a1, mut surv_a0) = (0.0, 0.0, 0.0);
    let (mut worse1, mut worse0, mut tie) = (0.0, 0.0, 0.0);
    for i in 0..pool.nrows() {
        let x: Vec<f64> = pool.row(i).iter().copied().collect();
        let (pa1, pd10, pd11) = arm_probabilities(config, 1, &x);
        let (pa0, pd00, pd01) = arm_probabilities(config, 0, &x);
        for o in 0..16u8 {
            let (ya1, yd1, ya0, yd0) = (o & 1, (o >> 1) & 1, (o >> 2) & 1, (o >> 3) & 1);
            let pr = outcome_prob(pa1, pd10, pd11, ya1, yd1)
                * outcome_prob(pa0, pd00, pd01, ya0, yd0)
                / n;
            a1 += pr * f64::from(ya1);
            a0 += pr * f64::from(ya0);
            d1 += pr * f64::from(yd1);
            d0 += pr * f64::from(yd0);
            c1 += pr * f64::from(ya1 | yd1);
            c0 += pr * f64::from(ya0 | yd0);
            if yd1 == 0 && yd0 == 0 {
                surv += pr;
                surv_a1 += pr * f64::from(ya1);
                surv_a0 += pr * f64::from(ya0);
            }
            let g1 = compose_ordinal(ya1, yd1);
            let g0 = compose_ordinal(ya0, yd0);
            joint[usize::from(g1 - 1)][usize::from(g0 - 1)] += pr;
            match g1.cmp(&g0) {
                std::cmp::Ordering::Greater => worse1 += pr,
                std::cmp::Ordering::Less => worse0 += pr,
                std::cmp::Ordering::Equal => tie += pr,
            }
        }
    }
    let j = JointOrdinalDistribution { p: joint };
    let m1 = j.marginal_active();
    let m0 = j.marginal_control();
    let mut delta = [0.0; 3];
    for jx in 0..3 {
        delta[jx] = m1[..=jx].iter().sum::<f64>() - m0[..=jx].iter().sum::<f64>();
    }
    let mut pi = [[[None; 4]; 4]; 2];
    for k in 0..4 {
        for l in 0..4 {
            if m1[k] > 0.0 {
                pi[1][k][l] = Some(joint[k][l] / m1[k]);
            }
            if m0[k] > 0.0 {
                pi[0][k][l] = Some(joint[l][k] / m0[k]);
            }
        }
    }
    EstimandSet {
        itt_adverse: a1 - a0,
        itt_death: d1 - d0,
        itt_composite: c1 - c0,
        sace: (surv >= SURVIVOR_MASS_FLOOR).then(|| (surv_a1 - surv_a0) / surv),
        p_k: [m0, m1],
        delta,
        tau10: worse1 + tie,
        kappa10: worse1,
        tau01: worse0 + tie,
        kappa01: worse0,
        u10: worse1 + 0.5 * tie,
        kappa_diff: worse1 - worse0,
        kappa_ratio: (worse0 > 0.0).then(|| worse1 / worse0),
        pi,
    }
}

/// Monte Carlo estimate of the headline estimands with standard errors,
/// from `draws` sampled (unit, outcome) realizations.
#[derive(Debug, Clone)]
pub struct MonteCarloTruth {
    pub estimates: Vec<(Estimand, f64, f64)>,
}

impl MonteCarloTruth {
    pub fn get(&self, e: Estimand) -> Option<(f64, f64)> {
        self.estimates
            .iter()
            .find(|(x, _, _)| *x == e)
            .map(|&(_, v, se)| (v, se))
    }
}

pub fn monte_carlo_estimands(
    config: &SimulationConfig,
    pool: &DMatrix<f64>,
    draws: usize,
    seed: u64,
) -> MonteCarloTruth {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = pool.nrows();
    let probs: Vec<[(f64, f64, f64); 2]> = (0..rows)
        .map(|i| {
            let x: Vec<f64> = pool.row(i).iter().copied().collect();
            [
                arm_probabilities(config, 0, &x),
                arm_probabilities(config, 1, &x),
            ]
        })
        .collect();
    // Per-draw contributions: itt A, D, composite, level diffs (4), worse1,
    // worse0, survivor, survivor*A1, survivor*A0.
    const K: usize = 12;
    let mut sum = [0.0f64; K];
    let mut cross = [[0.0f64; K]; K];
    for _ in 0..draws {
        let i = rng.random_range(0..rows);
        let mut y = [[0u8; 2]; 2];
        for arm in [1usize, 0] {
            let (pa, pd0, pd1) = probs[i][arm];
            let a = u8::from(rng.random::<f64>() < pa);
            let d = u8::from(rng.random::<f64>() < if a == 1 { pd1 } else { pd0 });
            y[arm] = [a, d];
        }
        let g1 = compose_ordinal(y[1][0], y[1][1]);
        let g0 = compose_ordinal(y[0][0], y[0][1]);
        let surv = f64::from(u8::from(y[1][1] == 0 && y[0][1] == 0));
        let mut v = [0.0f64; K];
        v[0] = f64::from(y[1][0]) - f64::from(y[0][0]);
        v[1] = f64::from(y[1][1]) - f64::from(y[0][1]);
        v[2] = f64::from(y[1][0] | y[1][1]) - f64::from(y[0][0] | y[0][1]);
        for k in 1..=4u8 {
            v[2 + usize::from(k)] = f64::from(u8::from(g1 == k)) - f64::from(u8::from(g0 == k));
        }
        v[7] = f64::from(u8::from(g1 > g0));
        v[8] = f64::from(u8::from(g1 < g0));
        v[9] = surv;
        v[10] = surv * f64::from(y[1][0]);
        v[11] = surv * f64::from(y[0][0]);
        for a in 0..K {
            sum[a] += v[a];
            for b in 0..K {
                cross[a][b] += v[a] * v[b];
            }
        }
    }
    let nd = draws as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / nd).collect();
    let cov = |a: usize, b: usize| (cross[a][b] / nd - mean[a] * mean[b]) / nd;
    let simple = |k: usize| (mean[k], cov(k, k).max(0.0).sqrt());
    let mut estimates = Vec::new();
    let names = [
        Estimand::IttAdverse,
        Estimand::IttDeath,
        Estimand::IttComposite,
        Estimand::LevelDiff { level: 1 },
        Estimand::LevelDiff { level: 2 },
        Estimand::LevelDiff { level: 3 },
        Estimand::LevelDiff { level: 4 },
    ];
    for (k, e) in names.into_iter().enumerate() {
        let (v, se) = simple(k);
        estimates.push((e, v, se));
    }
    // kappa difference
    let kd = mean[7] - mean[8];
    let kd_var = cov(7, 7) + cov(8, 8) - 2.0 * cov(7, 8);
    estimates.push((Estimand::KappaDiff, kd, kd_var.max(0.0).sqrt()));
    // ratio estimands by the delta method: r = num / den
    let ratio = |num: [f64; K], den: [f64; K]| {
        let nm: f64 = (0..K).map(|k| num[k] * mean[k]).sum();
        let dm: f64 = (0..K).map(|k| den[k] * mean[k]).sum();
        let r = nm / dm;
        let g: Vec<f64> = (0..K).map(|k| (num[k] - r * den[k]) / dm).collect();
        let var: f64 = (0..K)
            .flat_map(|a| (0..K).map(move |b| (a, b)))
            .map(|(a, b)| g[a] * g[b] * cov(a, b))
            .sum();
        (r, var.max(0.0).sqrt())
    };
    let unit = |k: usize| {
        let mut v = [0.0; K];
        v[k] = 1.0;
        v
    };
    let mut sace_num = [0.0; K];
    sace_num[10] = 1.0;
    sace_num[11] = -1.0;
    let (s, s_se) = ratio(sace_num, unit(9));
    estimates.push((Estimand::Sace, s, s_se));
    let (r, r_se) = ratio(unit(7), unit(8));
    estimates.push((Estimand::KappaRatio, r, r_se));
    MonteCarloTruth { estimates }
}

/// The generating model written as point-mass outcome fits, for evaluating
/// the model-based estimand code at the true parameters.
pub fn true_parameter_fits(config: &SimulationConfig) -> [ArmOutcomeFits<f64>; 2] {
    let fit = |w: u8| {
        let p = config.arm(w);
        let mut a = vec![p.phi_a];
        a.extend_from_slice(&p.xi_a);
        let mut d = vec![p.phi_d];
        d.extend_from_slice(&p.xi_d);
        d.push(p.zeta);
        ArmOutcomeFits {
            arm: w,
            adverse_fit: ModelFit::point_mass(DVector::from_vec(a), config.link),
            death_fit: ModelFit::point_mass(DVector::from_vec(d), config.link),
        }
    };
    [fit(0), fit(1)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::Cohort;
    use crate::estimands::{superpop_estimands, Population};
    use crate::imputation::ParameterSampler;
    use crate::outcome::OutcomeDesign;
    use crate::simulation::synthetic_covariate_pool;

    fn small_pool() -> DMatrix<f64> {
        synthetic_covariate_pool(150, 7)
    }

    #[test]
    fn enumeration_matches_model_evaluation_at_true_parameters() {
        let pool = small_pool();
        for config in [
            SimulationConfig::case_study_1(),
            SimulationConfig::case_study_2(),
        ] {
            let truth = true_estimands(&config, &pool);
            let fits = true_parameter_fits(&config);
            let sampler = ParameterSampler::new(&fits).unwrap();
            let draw = sampler.draw(1, 0);
            let n = pool.nrows();
            let cohort = Cohort::new(vec![0; n], vec![0; n], vec![0; n], pool.clone()).unwrap();
            let design = OutcomeDesign::from_matrix(pool.clone());
            let model =
                superpop_estimands(&draw, &sampler, &design, &cohort, Population::All).unwrap();
            for e in Estimand::all() {
                match (truth.get(e), model.get(e)) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12, "{e}: {a} vs {b}"),
                    (a, b) => assert_eq!(a.is_some(), b.is_some(), "{e}"),
                }
            }
        }
    }

    #[test]
    fn monte_carlo_agrees_with_enumeration() {
        let pool = small_pool();
        let config = SimulationConfig::case_study_2();
        let truth = true_estimands(&config, &pool);
        let mc = monte_carlo_estimands(&config, &pool, 200_000, 3);
        for (e, v, se) in &mc.estimates {
            let t = truth.get(*e).unwrap();
            assert!(se.is_finite() && *se > 0.0, "{e}");
            assert!((v - t).abs() < 4.0 * se, "{e}: mc {v} truth {t} se {se}");
        }
    }

    #[test]
    fn identical_arms_give_null_effects() {
        let pool = small_pool();
        let mut config = SimulationConfig::case_study_1();
        config.control = config.active.clone();
        let t = true_estimands(&config, &pool);
        assert!(t.itt_adverse.abs() < 1e-15 && t.itt_death.abs() < 1e-15);
        assert!(t.kappa_diff.abs() < 1e-15);
        assert!((t.kappa_ratio.unwrap() - 1.0).abs() < 1e-12);
        assert!(t.sace.unwrap().abs() < 1e-15);
    }
}
