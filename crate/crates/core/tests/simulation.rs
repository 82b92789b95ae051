mod common;

use std::collections::HashMap;
use std::path::PathBuf;

use nalgebra::DMatrix;
use ordinal_impute::cohort::Cohort;
use ordinal_impute::estimands::Estimand;
use ordinal_impute::glm::{sigmoid, LinkFunction};
use ordinal_impute::io::{read_matrix_csv, write_cohort_csv, write_matrix_csv};
use ordinal_impute::simulation::{
    aipw_estimate, application_analogue, arm_probabilities, default_covariate_pool,
    generate_dataset, raw_covariate_pool, run_replications, synthetic_covariate_pool,
    true_estimands, AlphaSpec, Method, ReplicationSettings, SimulationConfig, APPLICATION_SEED,
    POOL_COLUMNS, POOL_SEED, POOL_SIZE,
};
use ordinal_impute::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn repo_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn row_key(x: &DMatrix<f64>, i: usize) -> Vec<u64> {
    x.row(i).iter().map(|v| v.to_bits()).collect()
}

/// Cochran-Mantel-Haenszel statistic for `A(1)` vs `D(1)` over strata of
/// identical covariate rows.
fn cmh_statistic(config: &SimulationConfig, pool: &DMatrix<f64>, seed: u64) -> f64 {
    let sim = generate_dataset(config, pool, seed).unwrap();
    let x = &sim.cohort.covariates;
    let mut strata: HashMap<Vec<u64>, [f64; 4]> = HashMap::new();
    for i in 0..x.nrows() {
        let (a, d) = (sim.truth.a1[i], sim.truth.d1[i]);
        strata.entry(row_key(x, i)).or_default()[usize::from(2 * a + d)] += 1.0;
    }
    let (mut dev, mut var) = (0.0, 0.0);
    for t in strata.values() {
        let n = t.iter().sum::<f64>();
        if n < 2.0 {
            continue;
        }
        let (r1, c1) = (t[2] + t[3], t[1] + t[3]);
        dev += t[3] - r1 * c1 / n;
        var += r1 * (n - r1) * c1 * (n - c1) / (n * n * (n - 1.0));
    }
    dev * dev / var
}

#[test]
fn zero_zeta_makes_outcomes_conditionally_independent() {
    let mut config = common::small_config(100_000);
    config.active.zeta = 0.0;
    config.control.zeta = 0.0;
    let pool = synthetic_covariate_pool(500, 3);
    let critical = ChiSquared::new(1.0).unwrap().inverse_cdf(0.99);
    let stat = cmh_statistic(&config, &pool, 17);
    assert!(stat < critical, "CMH {stat} >= {critical}");
    config.active.zeta = 1.5;
    assert!(cmh_statistic(&config, &pool, 17) > critical);
}

#[test]
fn zero_assignment_coefficients_balance_arms() {
    let config = SimulationConfig {
        n: 20_000,
        alpha: AlphaSpec::Fixed(vec![0.0; 5]),
        ..SimulationConfig::case_study_1()
    };
    let pool = default_covariate_pool();
    let sim = generate_dataset(&config, &pool, 4).unwrap();
    let c = &sim.cohort;
    let n = c.len() as f64;
    let p = c.n_treated() as f64 / n;
    assert!((p - 0.5).abs() < 4.0 * (0.25 / n).sqrt(), "{p}");
    // Welch two-sample t per covariate, Bonferroni over five at 1%.
    for j in 0..c.n_covariates() {
        let (mut s, mut ss, mut k) = ([0.0; 2], [0.0; 2], [0.0; 2]);
        for i in 0..c.len() {
            let w = usize::from(c.w[i]);
            let v = c.covariates[(i, j)];
            s[w] += v;
            ss[w] += v * v;
            k[w] += 1.0;
        }
        let mean = [s[0] / k[0], s[1] / k[1]];
        let var = [
            (ss[0] - k[0] * mean[0] * mean[0]) / (k[0] - 1.0),
            (ss[1] - k[1] * mean[1] * mean[1]) / (k[1] - 1.0),
        ];
        let t = (mean[1] - mean[0]) / (var[0] / k[0] + var[1] / k[1]).sqrt();
        assert!(t.abs() < 3.29, "covariate {j}: t = {t}");
    }
}

#[test]
fn generated_frequencies_match_analytic_probabilities() {
    let config = SimulationConfig {
        n: 1_000_000,
        alpha: AlphaSpec::Fixed(vec![0.3, -0.4, 0.2, 0.5, -0.6]),
        ..SimulationConfig::case_study_2()
    };
    let pool = default_covariate_pool();
    let sim = generate_dataset(&config, &pool, 23).unwrap();
    let c = &sim.cohort;
    let alpha = [0.3, -0.4, 0.2, 0.5, -0.6];
    let mut expected = [0.0f64; 8];
    let mut observed = [0.0f64; 8];
    for i in 0..c.len() {
        let row: Vec<f64> = c.covariates.row(i).iter().copied().collect();
        let e = sigmoid(row.iter().zip(&alpha).map(|(x, a)| x * a).sum::<f64>());
        for w in [0u8, 1] {
            let pw = if w == 1 { e } else { 1.0 - e };
            let (pa, pd0, pd1) = arm_probabilities(&config, w, &row);
            let base = 4 * usize::from(w);
            expected[base] += pw * (1.0 - pa) * (1.0 - pd0);
            expected[base + 1] += pw * (1.0 - pa) * pd0;
            expected[base + 2] += pw * pa * (1.0 - pd1);
            expected[base + 3] += pw * pa * pd1;
        }
        observed[4 * usize::from(c.w[i]) + usize::from(2 * c.a[i] + c.d[i])] += 1.0;
    }
    let n = c.len() as f64;
    for k in 0..8 {
        let p = expected[k] / n;
        let f = observed[k] / n;
        assert!(
            (f - p).abs() < 4.0 * common::prop_se(p, n),
            "cell {k}: {f} vs {p}"
        );
    }
}

#[test]
fn generator_rejects_dimension_mismatch() {
    let pool = synthetic_covariate_pool(50, 1).columns(0, 4).into_owned();
    assert!(matches!(
        generate_dataset(&common::small_config(50), &pool, 1),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn degenerate_generator_has_no_effects() {
    let mut config = SimulationConfig::case_study_1();
    for arm in [&mut config.active, &mut config.control] {
        arm.phi_a = -800.0;
        arm.phi_d = -800.0;
        arm.xi_a = vec![0.0; 5];
        arm.xi_d = vec![0.0; 5];
        arm.zeta = 0.0;
    }
    let t = true_estimands(&config, &default_covariate_pool());
    let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
    assert!(close(t.p_k[1][0], 1.0) && close(t.p_k[0][0], 1.0));
    for v in [
        t.itt_adverse,
        t.itt_death,
        t.itt_composite,
        t.sace.unwrap(),
        t.kappa_diff,
    ] {
        assert!(close(v, 0.0), "{v}");
    }
    assert!(t.delta.iter().all(|&d| close(d, 0.0)));
    assert!(close(t.u10, 0.5));
}

#[test]
fn case_study_truths_on_shipped_pool() {
    let pool = default_covariate_pool();
    let t1 = true_estimands(&SimulationConfig::case_study_1(), &pool);
    assert!(t1.itt_adverse > t1.itt_death && t1.itt_death > 0.0);
    assert!(t1.sace.unwrap() < 0.0);
    assert!(t1.kappa_ratio.unwrap() > 1.0);
    let t2 = true_estimands(&SimulationConfig::case_study_2(), &pool);
    assert!(t2.itt_death > 0.0);
    assert!(t2.sace.unwrap() < 0.0);
    for t in [t1, t2] {
        for w in 0..2 {
            assert!((t.p_k[w].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((t.u10 + t.u01() - 1.0).abs() < 1e-12);
    }
}

/// Outcome depends on squares and interactions the working model lacks;
/// assignment follows a correctly specified logistic model.
fn misspecified_outcome_cohort(n: usize, seed: u64) -> (Cohort, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = default_covariate_pool();
    let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..pool.nrows())).collect();
    let x = pool.select_rows(&idx);
    let (mut w, mut a, mut d) = (vec![0u8; n], vec![0u8; n], vec![0u8; n]);
    let mut effect = 0.0;
    for i in 0..n {
        let r = x.row(i);
        let e = sigmoid(0.6 * r[0] - 0.5 * r[1] + 0.8 * r[3]);
        w[i] = u8::from(rng.random::<f64>() < e);
        let base = -1.0 + 0.9 * r[0] * r[0] - 0.8 * r[1] * r[2] + 0.7 * r[3];
        let p1 = sigmoid(base + 0.5);
        let p0 = sigmoid(base);
        effect += p1 - p0;
        let p = if w[i] == 1 { p1 } else { p0 };
        a[i] = u8::from(rng.random::<f64>() < p);
        d[i] = u8::from(rng.random::<f64>() < 0.2);
    }
    (Cohort::new(w, a, d, x).unwrap(), effect / n as f64)
}

#[test]
fn aipw_is_robust_to_outcome_misspecification() {
    let reps = 10;
    let mut bias = 0.0;
    for seed in 0..reps {
        let (cohort, truth) = misspecified_outcome_cohort(10_000, seed);
        let r = aipw_estimate(&cohort, Estimand::IttAdverse, 0.05).unwrap();
        bias += r.point - truth;
    }
    bias /= reps as f64;
    assert!(bias.abs() <= 0.01, "{bias}");
}

#[test]
fn aipw_rejects_unsupported_estimands() {
    let cohort = common::simulated_cohort(300, 2);
    for e in [
        Estimand::Sace,
        Estimand::KappaDiff,
        Estimand::KappaRatio,
        Estimand::U10,
    ] {
        assert!(matches!(
            aipw_estimate(&cohort, e, 0.05),
            Err(Error::NotSupported(_))
        ));
    }
}

#[test]
fn small_replication_study_metrics() {
    let config = common::small_config(400);
    let pool = synthetic_covariate_pool(400, 5);
    let settings = ReplicationSettings {
        replications: 4,
        imputations: 10,
        seed: 3,
        ..ReplicationSettings::default()
    };
    let metrics = run_replications(&config, &pool, &settings).unwrap();
    for row in &metrics.rows {
        assert!((0.0..=100.0).contains(&row.coverage));
        assert!(row.interval_width >= 0.0 && row.rmse >= row.bias.abs() - 1e-12);
        assert!(row.replications <= 4);
        assert!(row.method.supports(row.estimand));
    }
    assert!(metrics.get(Estimand::Sace, Method::Aipw).is_none());
    assert!(metrics
        .get(Estimand::Sace, Method::BayesianImputation)
        .is_some());
    let again = run_replications(&config, &pool, &settings).unwrap();
    assert_eq!(metrics.rows, again.rows);

    let mut buf = Vec::new();
    metrics.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("Estimand,method,Coverage,Bias,IW,RMSE,R\n"));
    assert_eq!(text.lines().count(), metrics.rows.len() + 1);
}

#[test]
fn burr_generator_runs() {
    let config = common::small_config(300).with_link(LinkFunction::Burr { c: 0.5 });
    let pool = synthetic_covariate_pool(300, 9);
    let sim = generate_dataset(&config, &pool, 2).unwrap();
    assert_eq!(sim.cohort.len(), 300);
    let t = true_estimands(&config, &pool);
    assert!((t.p_k[1].iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn shipped_data_files_match_generators() {
    let (names, pool) = read_matrix_csv(&repo_file("covariate_pool.csv")).unwrap();
    assert_eq!(names, POOL_COLUMNS);
    assert_eq!(pool, default_covariate_pool());
    let (_, raw) = read_matrix_csv(&repo_file("covariate_pool_raw.csv")).unwrap();
    assert_eq!(raw, raw_covariate_pool(POOL_SIZE, POOL_SEED));

    let mut regenerated = Vec::new();
    let path = repo_file("application.csv");
    let cohort = application_analogue(APPLICATION_SEED).unwrap();
    write_cohort_csv(&cohort, &mut regenerated, &path).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), regenerated);

    let mut pool_bytes = Vec::new();
    write_matrix_csv(&POOL_COLUMNS, &pool, &mut pool_bytes, &path).unwrap();
    assert_eq!(
        std::fs::read(repo_file("covariate_pool.csv")).unwrap(),
        pool_bytes
    );
}
