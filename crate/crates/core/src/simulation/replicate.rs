use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aipw::aipw_estimate;
use super::config::SimulationConfig;
use super::generate::generate_dataset;
use super::truth::true_estimands;
use crate::error::{Error, Result};
use crate::estimands::{superpop_estimands, Estimand, EstimandSet, Population};
use crate::imputation::{child_seed, ParameterSampler};
use crate::model::{fit_models, ModelSettings};
use crate::pooling::rubin_pool;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    BayesianImputation,
    Aipw,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BayesianImputation => "bayesian_imputation",
            Method::Aipw => "aipw",
        }
    }

    /// Whether the method produces an interval for `e`.
    pub fn supports(self, e: Estimand) -> bool {
        match self {
            Method::BayesianImputation => true,
            Method::Aipw => matches!(
                e,
                Estimand::IttAdverse
                    | Estimand::IttDeath
                    | Estimand::IttComposite
                    | Estimand::LevelDiff { .. }
                    | Estimand::Delta { .. }
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplicationSettings {
    pub replications: usize,
    pub imputations: usize,
    pub seed: u64,
    pub alpha: f64,
    pub methods: Vec<Method>,
    pub estimands: Vec<Estimand>,
    pub model: ModelSettings,
}

impl Default for ReplicationSettings {
    fn default() -> Self {
        ReplicationSettings {
            replications: 200,
            imputations: 100,
            seed: 1,
            alpha: 0.05,
            methods: vec![Method::BayesianImputation, Method::Aipw],
            estimands: Estimand::HEADLINE.to_vec(),
            model: ModelSettings::simulation(),
        }
    }
}

/// One interval estimate compared with the truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub estimand: Estimand,
    pub method: Method,
    pub truth: f64,
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
}

impl IntervalRecord {
    pub fn covers(&self) -> bool {
        self.lo <= self.truth && self.truth <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub estimand: Estimand,
    pub method: Method,
    /// Percent of intervals containing the truth.
    pub coverage: f64,
    pub bias: f64,
    pub interval_width: f64,
    pub rmse: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationMetrics {
    pub rows: Vec<MetricRow>,
    /// Replications in which each method failed and was excluded.
    pub failures: Vec<(Method, usize)>,
    pub records: Vec<Vec<IntervalRecord>>,
}

impl ReplicationMetrics {
    pub fn get(&self, estimand: Estimand, method: Method) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.estimand == estimand && r.method == method)
    }

    pub fn failures_of(&self, method: Method) -> usize {
        self.failures
            .iter()
            .find(|(m, _)| *m == method)
            .map_or(0, |(_, c)| *c)
    }

    /// CSV with columns `Estimand, method, Coverage, Bias, IW, RMSE, R`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["Estimand", "method", "Coverage", "Bias", "IW", "RMSE", "R"])
            .map_err(csv_error)?;
        for r in &self.rows {
            w.write_record([
                r.estimand.to_string(),
                r.method.name().to_string(),
                format!("{:.16e}", r.coverage),
                format!("{:.16e}", r.bias),
                format!("{:.16e}", r.interval_width),
                format!("{:.16e}", r.rmse),
                r.replications.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()
            .map_err(|e| Error::Numerical(format!("metrics write failed: {e}")))?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Numerical(format!("metrics write failed: {e}"))
}

/// Pool super-population draws of each estimand with Rubin's rules (no
/// within-draw variance, so `df = M - 1`).
pub fn bayesian_intervals(
    draws: &[EstimandSet<f64>],
    estimands: &[Estimand],
    alpha: f64,
) -> Result<Vec<(Estimand, f64, f64, f64)>> {
    estimands
        .iter()
        .map(|&e| {
            let values: Vec<f64> = draws.iter().filter_map(|d| d.get(e)).collect();
            if values.len() < 2 {
                return Err(Error::Numerical(format!(
                    "{e} undefined in all but {} draws",
                    values.len()
                )));
            }
            let zeros = vec![0.0; values.len()];
            let p = rubin_pool(&values, &zeros, alpha, None)?;
            Ok((e, p.point, p.lo, p.hi))
        })
        .collect()
}

fn bayesian_replicate(
    cohort: &crate::cohort::Cohort,
    settings: &ReplicationSettings,
    seed: u64,
) -> Result<Vec<(Estimand, f64, f64, f64)>> {
    let fitted = fit_models(cohort, &settings.model)?;
    let sampler = ParameterSampler::new(&fitted.arms)?;
    let draws = (0..settings.imputations)
        .map(|m| {
            let draw = sampler.draw(seed, m);
            superpop_estimands(&draw, &sampler, &fitted.design, cohort, Population::All)
        })
        .collect::<Result<Vec<_>>>()?;
    bayesian_intervals(&draws, &settings.estimands, settings.alpha)
}

fn one_replication(
    config: &SimulationConfig,
    pool: &DMatrix<f64>,
    settings: &ReplicationSettings,
    r: usize,
) -> Result<(Vec<IntervalRecord>, Vec<Method>)> {
    let seed = child_seed(settings.seed, r as u64);
    let sim = generate_dataset(config, pool, seed)?;
    let truth = true_estimands(config, &sim.cohort.covariates);
    let mut records = Vec::new();
    let mut failed = Vec::new();
    for &method in &settings.methods {
        let result: Result<Vec<(Estimand, f64, f64, f64)>> = match method {
            Method::BayesianImputation => {
                bayesian_replicate(&sim.cohort, settings, child_seed(seed, 1))
            }
            Method::Aipw => settings
                .estimands
                .iter()
                .filter(|e| method.supports(**e))
                .map(|&e| {
                    aipw_estimate(&sim.cohort, e, settings.alpha).map(|a| (e, a.point, a.lo, a.hi))
                })
                .collect(),
        };
        match result {
            Ok(rows) => {
                for (estimand, point, lo, hi) in rows {
                    if let Some(t) = truth.get(estimand) {
                        records.push(IntervalRecord {
                            estimand,
                            method,
                            truth: t,
                            point,
                            lo,
                            hi,
                        });
                    }
                }
            }
            Err(e) => {
                log::warn!("replication {r}: {} failed: {e}", method.name());
                failed.push(method);
            }
        }
    }
    Ok((records, failed))
}

/// Repeated-sampling evaluation of the interval estimators. Replications
/// run in parallel from child seeds and are aggregated in index order.
pub fn run_replications(
    config: &SimulationConfig,
    pool: &DMatrix<f64>,
    settings: &ReplicationSettings,
) -> Result<ReplicationMetrics> {
    if settings.replications == 0 {
        return Err(Error::InvalidConfig(
            "at least one replication is needed".into(),
        ));
    }
    if settings.imputations < 2 {
        return Err(Error::InvalidConfig(format!(
            "at least 2 imputations are needed, got {}",
            settings.imputations
        )));
    }
    config.validate()?;
    settings.model.priors.validate()?;
    let outcomes: Vec<Result<(Vec<IntervalRecord>, Vec<Method>)>> = (0..settings.replications)
        .into_par_iter()
        .map(|r| one_replication(config, pool, settings, r))
        .collect();
    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures: Vec<(Method, usize)> = settings.methods.iter().map(|&m| (m, 0)).collect();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok((rec, failed)) => {
                for m in failed {
                    if let Some(f) = failures.iter_mut().find(|(x, _)| *x == m) {
                        f.1 += 1;
                    }
                }
                records.push(rec);
            }
            // Data generation itself failed: every method loses the replication.
            Err(e) => {
                log::warn!("replication {r} failed: {e}");
                for f in &mut failures {
                    f.1 += 1;
                }
            }
        }
    }
    let mut rows = Vec::new();
    for &method in &settings.methods {
        for &estimand in &settings.estimands {
            let hits: Vec<&IntervalRecord> = records
                .iter()
                .flatten()
                .filter(|x| x.method == method && x.estimand == estimand)
                .collect();
            if hits.is_empty() {
                continue;
            }
            let k = hits.len() as f64;
            let err = |x: &&IntervalRecord| x.point - x.truth;
            rows.push(MetricRow {
                estimand,
                method,
                coverage: 100.0 * hits.iter().filter(|x| x.covers()).count() as f64 / k,
                bias: hits.iter().map(err).sum::<f64>() / k,
                interval_width: hits.iter().map(|x| x.hi - x.lo).sum::<f64>() / k,
                rmse: (hits.iter().map(|x| err(x).powi(2)).sum::<f64>() / k).sqrt(),
                replications: hits.len(),
            });
        }
    }
    Ok(ReplicationMetrics {
        rows,
        failures,
        records,
    })
}
