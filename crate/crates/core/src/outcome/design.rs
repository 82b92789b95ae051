use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::design::{
    build_spline_basis, logit_knots, spline_with_knots, subclassify, SplineBasis,
    SubclassAssignment,
};
use crate::error::{Error, Result};

/// How the internal spline knots are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KnotRule {
    /// Knots at the subclass boundaries; `k_init` subclasses give
    /// `k_init - 1` knots before the decrement rule.
    Subclass { k_init: usize },
    /// Knots at equally spaced quantiles of the logit scores.
    Quantile { internal_knots: usize },
}

impl Default for KnotRule {
    fn default() -> Self {
        KnotRule::Subclass { k_init: 6 }
    }
}

/// Shared outcome-model design for all units: spline columns on the logit
/// propensity score followed by the adjustment covariates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDesign {
    /// `None` for designs given directly as a covariate matrix.
    pub spline: Option<SplineBasis<f64>>,
    pub subclasses: Option<SubclassAssignment<f64>>,
    /// Covariate left out of the linear adjustment, if any.
    pub omitted: Option<usize>,
    pub n_spline: usize,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    #[serde(skip)]
    row_major: Vec<f64>,
}

impl OutcomeDesign {
    pub fn build(
        scores: &[f64],
        logit_scores: &[f64],
        treatment: &[u8],
        covariates: &DMatrix<f64>,
        rule: KnotRule,
        omitted: Option<usize>,
    ) -> Result<Self> {
        let n = covariates.nrows();
        if scores.len() != n || logit_scores.len() != n || treatment.len() != n {
            return Err(Error::InvalidInput(
                "scores, treatment and covariates differ in length".into(),
            ));
        }
        if let Some(j) = omitted {
            if j >= covariates.ncols() {
                return Err(Error::InvalidConfig(format!(
                    "omitted covariate index {j} out of range for {} covariates",
                    covariates.ncols()
                )));
            }
        }
        let (subclasses, (spline, basis)) = match rule {
            KnotRule::Subclass { k_init } => {
                let s = subclassify(scores, treatment, k_init)?;
                let knots = logit_knots(&s.boundaries);
                let built = spline_with_knots(logit_scores, &knots)?;
                (Some(s), built)
            }
            KnotRule::Quantile { internal_knots } => {
                (None, build_spline_basis(logit_scores, internal_knots)?)
            }
        };
        let keep: Vec<usize> = (0..covariates.ncols())
            .filter(|&j| Some(j) != omitted)
            .collect();
        let n_spline = basis.ncols();
        let mut matrix = DMatrix::<f64>::zeros(n, n_spline + keep.len());
        matrix.columns_mut(0, n_spline).copy_from(&basis);
        for (c, &j) in keep.iter().enumerate() {
            matrix.set_column(n_spline + c, &covariates.column(j));
        }
        let row_major = matrix.transpose().as_slice().to_vec();
        Ok(OutcomeDesign {
            spline: Some(spline),
            subclasses,
            omitted,
            n_spline,
            matrix,
            row_major,
        })
    }

    /// Design with the given columns and no spline terms.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Self {
        let row_major = matrix.transpose().as_slice().to_vec();
        OutcomeDesign {
            spline: None,
            subclasses: None,
            omitted: None,
            n_spline: 0,
            matrix,
            row_major,
        }
    }

    pub fn n_linear(&self) -> usize {
        self.matrix.ncols() - self.n_spline
    }

    /// Number of columns, excluding the intercept.
    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }

    /// Design row of unit `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let q = self.matrix.ncols();
        &self.row_major[i * q..(i + 1) * q]
    }

    /// Rows for the given units.
    pub fn rows(&self, idx: &[usize]) -> DMatrix<f64> {
        self.matrix.select_rows(idx)
    }
}
