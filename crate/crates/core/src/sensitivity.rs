//! Sensitivity of the rank-based effect to an unobserved covariate `Z` that
//! shifts the imputation-time predictors of both outcomes.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cohort::Cohort;
use crate::error::{Error, Result};
use crate::estimands::{finite_sample_estimands, Population};
use crate::imputation::{
    child_seed, impute_with, stream_rng, ConfounderShift, ParameterSampler, Purpose,
};
use crate::io::{csv_err, format_real, write_atomic};
use crate::model::FittedModels;
use crate::pooling::rubin_pool;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivitySpec {
    /// Mean of `Z` among control units; it is 0 among treated units.
    pub mu_z_control: f64,
    pub delta_a_grid: Vec<f64>,
    pub delta_d_grid: Vec<f64>,
    /// Reuse the baseline random streams in every cell. Otherwise each cell
    /// gets its own child seed.
    pub shared_streams: bool,
    pub population: Population,
    pub alpha: f64,
}

impl Default for SensitivitySpec {
    fn default() -> Self {
        SensitivitySpec {
            mu_z_control: 1.0,
            delta_a_grid: linspace(-1.0, 1.0, 21),
            delta_d_grid: linspace(-1.0, 1.0, 21),
            shared_streams: true,
            population: Population::All,
            alpha: 0.05,
        }
    }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl SensitivitySpec {
    pub fn validate(&self) -> Result<()> {
        if self.delta_a_grid.is_empty() || self.delta_d_grid.is_empty() {
            return Err(Error::InvalidConfig("sensitivity grid is empty".into()));
        }
        let all = self
            .delta_a_grid
            .iter()
            .chain(&self.delta_d_grid)
            .chain(std::iter::once(&self.mu_z_control));
        if all.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig(
                "sensitivity grid values must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Pooled `kappa10 - kappa01` over the grid; rows index `delta_a`, columns
/// `delta_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityGrid {
    pub mu_z_control: f64,
    pub delta_a: Vec<f64>,
    pub delta_d: Vec<f64>,
    pub estimate: DMatrix<f64>,
    pub se: DMatrix<f64>,
    /// `estimate / se`, NaN where `se` is zero.
    pub standardized: DMatrix<f64>,
    pub baseline_estimate: f64,
    pub baseline_se: f64,
}

fn confounder(seed: u64, m: usize, w: &[u8], mu_z_control: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, m, Purpose::Confounder);
    w.iter()
        .map(|&wi| {
            let mean = if wi == 1 { 0.0 } else { mu_z_control };
            mean + rng.sample::<f64, _>(StandardNormal)
        })
        .collect()
}

struct Cell {
    estimate: f64,
    se: f64,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    fitted: &FittedModels,
    sampler: &ParameterSampler,
    cohort: &Cohort,
    spec: &SensitivitySpec,
    shift: Option<(f64, f64)>,
    imputations: usize,
    seed: u64,
) -> Result<Cell> {
    let estimates = (0..imputations)
        .map(|m| {
            let draw = sampler.draw(seed, m);
            let z;
            let s = match shift {
                Some((delta_a, delta_d)) => {
                    z = confounder(seed, m, &cohort.w, spec.mu_z_control);
                    Some(ConfounderShift {
                        z: &z,
                        delta_a,
                        delta_d,
                    })
                }
                None => None,
            };
            let ds = impute_with(&draw, sampler, &fitted.design, cohort, seed, m, s);
            Ok(finite_sample_estimands(&ds, spec.population)?.kappa_diff)
        })
        .collect::<Result<Vec<f64>>>()?;
    let zeros = vec![0.0; estimates.len()];
    let pooled = rubin_pool(&estimates, &zeros, spec.alpha, None)?;
    Ok(Cell {
        estimate: pooled.point,
        se: pooled.se(),
    })
}

/// Re-impute with `Z` added to the outcome predictors for every
/// `(delta_a, delta_d)` cell, holding the fitted coefficients fixed.
pub fn run_sensitivity(
    fitted: &FittedModels,
    cohort: &Cohort,
    spec: &SensitivitySpec,
    imputations: usize,
    seed: u64,
) -> Result<SensitivityGrid> {
    spec.validate()?;
    if imputations < 2 {
        return Err(Error::InvalidConfig(format!(
            "at least 2 imputations are needed, got {imputations}"
        )));
    }
    let sampler = ParameterSampler::new(&fitted.arms)?;
    let baseline = evaluate_cell(fitted, &sampler, cohort, spec, None, imputations, seed)?;
    let (na, nd) = (spec.delta_a_grid.len(), spec.delta_d_grid.len());
    let cells = (0..na * nd)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / nd, idx % nd);
            let cell_seed = if spec.shared_streams {
                seed
            } else {
                child_seed(seed, idx as u64)
            };
            let shift = (spec.delta_a_grid[i], spec.delta_d_grid[j]);
            evaluate_cell(
                fitted,
                &sampler,
                cohort,
                spec,
                Some(shift),
                imputations,
                cell_seed,
            )
        })
        .collect::<Result<Vec<Cell>>>()?;
    let estimate = DMatrix::from_fn(na, nd, |i, j| cells[i * nd + j].estimate);
    let se = DMatrix::from_fn(na, nd, |i, j| cells[i * nd + j].se);
    let standardized = estimate.zip_map(&se, |e, s| if s > 0.0 { e / s } else { f64::NAN });
    Ok(SensitivityGrid {
        mu_z_control: spec.mu_z_control,
        delta_a: spec.delta_a_grid.clone(),
        delta_d: spec.delta_d_grid.clone(),
        estimate,
        se,
        standardized,
        baseline_estimate: baseline.estimate,
        baseline_se: baseline.se,
    })
}

impl SensitivityGrid {
    /// Long-format CSV, row-major over `(delta_a, delta_d)`.
    pub fn write_csv<W: Write>(&self, out: W, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["delta_a", "delta_d", "estimate", "se", "standardized"])
            .map_err(|e| csv_err(path, e))?;
        for (i, &da) in self.delta_a.iter().enumerate() {
            for (j, &dd) in self.delta_d.iter().enumerate() {
                w.write_record([
                    format_real(da),
                    format_real(dd),
                    format_real(self.estimate[(i, j)]),
                    format_real(self.se[(i, j)]),
                    format_real(self.standardized[(i, j)]),
                ])
                .map_err(|e| csv_err(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

pub fn export_heatmap_data(grid: &SensitivityGrid, path: &Path, overwrite: bool) -> Result<()> {
    write_atomic(path, overwrite, |w| grid.write_csv(w, path))
}
