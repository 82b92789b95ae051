use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::config::RunConfig;
use super::ingest::IngestedCohort;
use super::write::{csv_err, format_opt, format_real, write_atomic};
use crate::cohort::ColumnScaling;
use crate::error::{Error, Result, StageContext};
use crate::estimands::{finite_sample_estimands, superpop_estimands, Estimand, EstimandSet};
use crate::imputation::{posterior_predictive_check, run_imputations, ParameterSampler};
use crate::model::{fit_models, FittedModels};
use crate::pooling::{percentile_pool, rubin_pool, PoolMethod, PooledResult};

/// Completed-data (`fs.`) or model-based (`sp.`) version of an estimand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateKind {
    FiniteSample,
    SuperPopulation,
}

impl EstimateKind {
    pub fn prefix(self) -> &'static str {
        match self {
            EstimateKind::FiniteSample => "fs",
            EstimateKind::SuperPopulation => "sp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRow {
    pub name: String,
    pub estimand: Estimand,
    pub kind: EstimateKind,
    pub point: f64,
    pub se: f64,
    pub lo: f64,
    pub hi: f64,
    pub df: Option<f64>,
    /// `None` when the estimand is undefined in all but at most one draw.
    pub method: Option<PoolMethod>,
    /// Imputations in which the estimand was defined.
    pub defined: usize,
}

/// Per-imputation values; `columns[j]` names `values[m][j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawTable {
    pub columns: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArmFitSummary {
    pub arm: u8,
    pub adverse_converged: bool,
    pub death_converged: bool,
    pub adverse_iterations: usize,
    pub death_iterations: usize,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub arm: u8,
    pub observed: [usize; 4],
    pub tail_probability: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSummary {
    pub subclasses: Option<usize>,
    pub internal_knots: Vec<f64>,
    pub boundary_knots: [f64; 2],
    pub spline_columns: usize,
    pub omitted_covariate: Option<String>,
}

/// Run record: inputs, settings and derived design choices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub imputations: usize,
    pub alpha: f64,
    pub population: crate::estimands::Population,
    pub data_path: Option<PathBuf>,
    pub rows: usize,
    pub treated: usize,
    pub control: usize,
    pub covariates: Vec<ColumnScaling>,
    pub design: DesignSummary,
    pub fits: Vec<ArmFitSummary>,
    pub nu_com: Option<f64>,
    pub predictive_checks: Vec<CheckSummary>,
    pub threads: usize,
    pub timing_seconds: BTreeMap<String, f64>,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct AnalysisResults {
    pub estimates: Vec<EstimateRow>,
    pub draws: DrawTable,
    pub manifest: Manifest,
    pub fitted: FittedModels,
}

impl AnalysisResults {
    pub fn get(&self, estimand: Estimand, kind: EstimateKind) -> Option<&EstimateRow> {
        self.estimates
            .iter()
            .find(|r| r.estimand == estimand && r.kind == kind)
    }
}

fn pool_column(
    values: &[Option<f64>],
    alpha: f64,
    percentile: bool,
    nu_com: Option<f64>,
) -> Result<Option<PooledResult<f64>>> {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.len() < 2 {
        return Ok(None);
    }
    let zeros = vec![0.0; defined.len()];
    Ok(Some(if percentile {
        percentile_pool(&defined, &zeros, alpha)?
    } else {
        rubin_pool(&defined, &zeros, alpha, nu_com)?
    }))
}

fn summarize(
    sets: &[EstimandSet<f64>],
    estimands: &[Estimand],
    kind: EstimateKind,
    alpha: f64,
    percentile: bool,
    nu_com: Option<f64>,
) -> Result<(Vec<EstimateRow>, Vec<Vec<Option<f64>>>)> {
    let mut rows = Vec::with_capacity(estimands.len());
    let mut columns = Vec::with_capacity(estimands.len());
    for &e in estimands {
        let values: Vec<Option<f64>> = sets.iter().map(|s| s.get(e)).collect();
        let defined = values.iter().flatten().count();
        if defined < values.len() {
            log::info!(
                "{e} undefined in {} of {} draws",
                values.len() - defined,
                values.len()
            );
        }
        let pooled = pool_column(&values, alpha, percentile, nu_com)?;
        let name = format!("{}.{}", kind.prefix(), e);
        rows.push(match pooled {
            Some(p) => EstimateRow {
                name,
                estimand: e,
                kind,
                point: p.point,
                se: p.se(),
                lo: p.lo,
                hi: p.hi,
                df: p.df,
                method: Some(p.method),
                defined,
            },
            None => EstimateRow {
                name,
                estimand: e,
                kind,
                point: f64::NAN,
                se: f64::NAN,
                lo: f64::NAN,
                hi: f64::NAN,
                df: None,
                method: None,
                defined,
            },
        });
        columns.push(values);
    }
    Ok((rows, columns))
}

/// Propensity, design, outcome fits, `M` imputations, finite-sample and
/// super-population estimands, pooling. Errors carry the failing stage.
pub fn run_analysis(config: &RunConfig, data: &IngestedCohort) -> Result<AnalysisResults> {
    if config.imputations < 2 {
        return Err(Error::InvalidConfig(format!(
            "at least 2 imputations are needed, got {}",
            config.imputations
        )))
        .stage("config");
    }
    let cohort = &data.cohort;
    let population = config.population();
    let estimands = config.estimands();
    let mut timing = BTreeMap::new();
    let mut clock = Instant::now();
    let mut lap = |name: &str, timing: &mut BTreeMap<String, f64>| {
        timing.insert(name.to_string(), clock.elapsed().as_secs_f64());
        clock = Instant::now();
    };

    let fitted = fit_models(cohort, &config.model)?;
    lap("fit", &mut timing);

    let run = run_imputations(
        &fitted.arms,
        &fitted.design,
        cohort,
        config.imputations,
        config.seed,
    )
    .stage("imputation")?;
    lap("imputation", &mut timing);

    let fs_sets = run
        .datasets
        .par_iter()
        .map(|ds| finite_sample_estimands(ds, population))
        .collect::<Result<Vec<_>>>()
        .stage("finite-sample estimands")?;
    let sampler = ParameterSampler::new(&fitted.arms).stage("super-population estimands")?;
    let sp_sets = run
        .draws
        .par_iter()
        .map(|d| superpop_estimands(d, &sampler, &fitted.design, cohort, population))
        .collect::<Result<Vec<_>>>()
        .stage("super-population estimands")?;
    lap("estimands", &mut timing);

    let n = cohort.len();
    let p = fitted.design.ncols() + 1;
    let nu_com = config
        .pooling
        .nu_com
        .or_else(|| (n < config.pooling.small_sample_threshold && n > p).then(|| (n - p) as f64));
    let percentile = config.imputations >= config.pooling.percentile_min_imputations;
    let (mut estimates, mut columns) = summarize(
        &fs_sets,
        &estimands,
        EstimateKind::FiniteSample,
        config.alpha,
        percentile,
        nu_com,
    )
    .stage("pooling")?;
    let (sp_rows, sp_columns) = summarize(
        &sp_sets,
        &estimands,
        EstimateKind::SuperPopulation,
        config.alpha,
        false,
        None,
    )
    .stage("pooling")?;
    estimates.extend(sp_rows);
    columns.extend(sp_columns);
    let names: Vec<String> = estimates.iter().map(|r| r.name.clone()).collect();
    let values: Vec<Vec<Option<f64>>> = (0..config.imputations)
        .map(|m| columns.iter().map(|c| c[m]).collect())
        .collect();
    lap("pooling", &mut timing);

    let check_seed = crate::imputation::child_seed(config.seed, u64::MAX);
    let checks = fitted
        .arms
        .iter()
        .map(|f| {
            posterior_predictive_check(f, &fitted.design, cohort, config.imputations, check_seed)
                .map(|c| CheckSummary {
                    arm: c.arm,
                    observed: c.observed,
                    tail_probability: c.tail_probability,
                })
        })
        .collect::<Result<Vec<_>>>()
        .stage("predictive check")?;
    lap("predictive check", &mut timing);

    let design = &fitted.design;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        imputations: config.imputations,
        alpha: config.alpha,
        population,
        data_path: config.data.path.clone(),
        rows: data.rows,
        treated: data.treated,
        control: data.control,
        covariates: data.scaling.clone(),
        design: DesignSummary {
            subclasses: design.subclasses.as_ref().map(|s| s.k_final),
            internal_knots: design
                .spline
                .as_ref()
                .map(|s| s.internal_knots.clone())
                .unwrap_or_default(),
            boundary_knots: design
                .spline
                .as_ref()
                .map_or([f64::NAN; 2], |s| [s.boundary_knots.0, s.boundary_knots.1]),
            spline_columns: design.n_spline,
            omitted_covariate: design
                .omitted
                .and_then(|j| cohort.covariate_names.get(j).cloned()),
        },
        fits: fitted
            .arms
            .iter()
            .map(|f| ArmFitSummary {
                arm: f.arm,
                adverse_converged: f.adverse_fit.converged,
                death_converged: f.death_fit.converged,
                adverse_iterations: f.adverse_fit.iterations,
                death_iterations: f.death_fit.iterations,
                eta: f.eta(),
            })
            .collect(),
        nu_com,
        predictive_checks: checks,
        threads: rayon::current_num_threads(),
        timing_seconds: timing,
        config: serde_json::to_value(config)
            .map_err(|e| Error::InvalidConfig(format!("config is not serializable: {e}")))?,
    };
    Ok(AnalysisResults {
        estimates,
        draws: DrawTable {
            columns: names,
            values,
        },
        manifest,
        fitted,
    })
}

pub const ESTIMATE_COLUMNS: [&str; 7] = ["estimand", "point", "se", "lo", "hi", "df", "method"];

pub fn write_estimates<W: std::io::Write>(rows: &[EstimateRow], out: W, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ESTIMATE_COLUMNS)
        .map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record([
            r.name.clone(),
            format_real(r.point),
            format_real(r.se),
            format_real(r.lo),
            format_real(r.hi),
            format_opt(r.df),
            r.method.map_or("NA", |m| m.name()).to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_draws<W: std::io::Write>(draws: &DrawTable, out: W, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["m".to_string()];
    header.extend(draws.columns.iter().cloned());
    w.write_record(&header).map_err(|e| csv_err(path, e))?;
    for (m, row) in draws.values.iter().enumerate() {
        let mut rec = vec![m.to_string()];
        rec.extend(row.iter().map(|&v| format_opt(v)));
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportPaths {
    pub estimates: PathBuf,
    pub draws: PathBuf,
    pub manifest: PathBuf,
}

impl ReportPaths {
    pub fn in_dir(dir: &Path) -> Self {
        ReportPaths {
            estimates: dir.join("estimates.csv"),
            draws: dir.join("draws.csv"),
            manifest: dir.join("manifest.json"),
        }
    }
}

/// Write the estimate table, draws and manifest, each atomically. Nothing
/// is written if any target exists and `overwrite` is false.
pub fn emit_report(results: &AnalysisResults, paths: &ReportPaths, overwrite: bool) -> Result<()> {
    if !overwrite {
        for p in [&paths.estimates, &paths.draws, &paths.manifest] {
            if p.exists() {
                return Err(Error::Exists(p.clone()));
            }
        }
    }
    write_atomic(&paths.estimates, overwrite, |w| {
        write_estimates(&results.estimates, w, &paths.estimates)
    })?;
    write_atomic(&paths.draws, overwrite, |w| {
        write_draws(&results.draws, w, &paths.draws)
    })?;
    write_json(&paths.manifest, &results.manifest, overwrite)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T, overwrite: bool) -> Result<()> {
    write_atomic(path, overwrite, |w| {
        serde_json::to_writer_pretty(&mut *w, value)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))
    })
}
