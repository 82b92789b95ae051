use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Observed cohort: treatment, adverse event and death indicators plus
/// covariates (one row per unit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub ids: Vec<String>,
    pub w: Vec<u8>,
    pub a: Vec<u8>,
    pub d: Vec<u8>,
    pub covariates: DMatrix<f64>,
    pub covariate_names: Vec<String>,
}

impl Cohort {
    /// Builds a cohort with generated ids `1..=n` and names `x1..xP`.
    pub fn new(w: Vec<u8>, a: Vec<u8>, d: Vec<u8>, covariates: DMatrix<f64>) -> Result<Self> {
        let ids = (1..=w.len()).map(|i| i.to_string()).collect();
        let names = (1..=covariates.ncols()).map(|j| format!("x{j}")).collect();
        let c = Cohort {
            ids,
            w,
            a,
            d,
            covariates,
            covariate_names: names,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.w.len();
        if self.a.len() != n
            || self.d.len() != n
            || self.ids.len() != n
            || self.covariates.nrows() != n
        {
            return Err(Error::InvalidInput(
                "cohort columns differ in length".into(),
            ));
        }
        if self.covariate_names.len() != self.covariates.ncols() {
            return Err(Error::InvalidInput(
                "covariate names do not match covariate columns".into(),
            ));
        }
        for (i, ((&w, &a), &d)) in self.w.iter().zip(&self.a).zip(&self.d).enumerate() {
            if w > 1 || a > 1 || d > 1 {
                return Err(Error::Value {
                    row: i + 1,
                    message: "w, a and d must be 0 or 1".into(),
                });
            }
        }
        if self.covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("covariates must be finite".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn n_covariates(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn n_treated(&self) -> usize {
        self.w.iter().filter(|&&w| w == 1).count()
    }

    /// Indices of units with `W = arm`.
    pub fn arm_indices(&self, arm: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.w[i] == arm).collect()
    }

    /// Swap the arm labels of every unit.
    pub fn with_arms_swapped(&self) -> Cohort {
        Cohort {
            w: self.w.iter().map(|&w| 1 - w).collect(),
            ..self.clone()
        }
    }
}

/// Column summary recorded when covariates are standardized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaling {
    pub name: String,
    pub binary: bool,
    pub mean: f64,
    pub sd: f64,
}

/// Standardize non-binary columns to mean 0 and SD 1 (sample SD); columns
/// whose values are all 0 or 1 are left untouched. Constant columns are only
/// centred.
pub fn standardize_columns(x: &mut DMatrix<f64>, names: &[String]) -> Vec<ColumnScaling> {
    let n = x.nrows() as f64;
    let mut out = Vec::with_capacity(x.ncols());
    for (j, name) in names.iter().enumerate().take(x.ncols()) {
        let mut col = x.column_mut(j);
        let binary = col.iter().all(|&v| v == 0.0 || v == 1.0);
        let mean = col.iter().sum::<f64>() / n;
        let var = if n > 1.0 {
            col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        let sd = var.sqrt();
        if !binary {
            let scale = if sd > 0.0 { sd } else { 1.0 };
            for v in col.iter_mut() {
                *v = (*v - mean) / scale;
            }
        }
        out.push(ColumnScaling {
            name: name.clone(),
            binary,
            mean,
            sd,
        });
    }
    out
}
