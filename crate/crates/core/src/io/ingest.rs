use std::fs::File;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use super::write::{csv_err, format_real};
use crate::cohort::{standardize_columns, Cohort, ColumnScaling};
use crate::error::{Error, Result};

pub const REQUIRED_COLUMNS: [&str; 4] = ["id", "w", "a", "d"];

/// A cohort read from disk with the scaling applied to its covariates.
#[derive(Debug, Clone, Serialize)]
pub struct IngestedCohort {
    #[serde(skip)]
    pub cohort: Cohort,
    pub rows: usize,
    pub treated: usize,
    pub control: usize,
    pub scaling: Vec<ColumnScaling>,
}

fn binary(field: &str, column: &str, row: usize) -> Result<u8> {
    match field.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(Error::Value {
            row,
            message: format!("column '{column}' must be 0 or 1, got '{other}'"),
        }),
    }
}

/// Read a cohort from CSV with columns `id, w, a, d` and one or more
/// covariate columns. Continuous covariates are standardized; rows are
/// numbered from 1 in errors.
pub fn ingest_csv(path: &Path) -> Result<IngestedCohort> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, path)
}

pub fn ingest_reader<R: Read>(reader: R, path: &Path) -> Result<IngestedCohort> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    for (j, h) in header.iter().enumerate() {
        if h.is_empty() {
            return Err(Error::Schema(format!("column {} has an empty name", j + 1)));
        }
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let (id_col, w_col, a_col, d_col) = (find("id")?, find("w")?, find("a")?, find("d")?);
    let cov_cols: Vec<usize> = (0..header.len())
        .filter(|&j| ![id_col, w_col, a_col, d_col].contains(&j))
        .collect();
    if cov_cols.is_empty() {
        return Err(Error::Schema("no covariate columns".into()));
    }
    let names: Vec<String> = cov_cols.iter().map(|&j| header[j].to_string()).collect();
    let (mut ids, mut w, mut a, mut d) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut values: Vec<f64> = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { .. } => Error::Value {
                row,
                message: "wrong number of fields".into(),
            },
            _ => csv_err(path, e),
        })?;
        let id = rec[id_col].to_string();
        if id.is_empty() {
            return Err(Error::Value {
                row,
                message: "empty id".into(),
            });
        }
        ids.push(id);
        w.push(binary(&rec[w_col], "w", row)?);
        a.push(binary(&rec[a_col], "a", row)?);
        d.push(binary(&rec[d_col], "d", row)?);
        for (&j, name) in cov_cols.iter().zip(&names) {
            let v: f64 = rec[j].parse().map_err(|_| Error::Value {
                row,
                message: format!("column '{name}' is not a number: '{}'", &rec[j]),
            })?;
            if !v.is_finite() {
                return Err(Error::Value {
                    row,
                    message: format!("column '{name}' is not finite"),
                });
            }
            values.push(v);
        }
    }
    let n = ids.len();
    if n == 0 {
        return Err(Error::Schema(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    let mut x = DMatrix::from_row_slice(n, names.len(), &values);
    let scaling = standardize_columns(&mut x, &names);
    let mut cohort = Cohort::new(w, a, d, x)?;
    cohort.ids = ids;
    cohort.covariate_names = names;
    let treated = cohort.n_treated();
    log::info!(
        "read {n} rows from {} ({treated} treated, {} control)",
        path.display(),
        n - treated
    );
    Ok(IngestedCohort {
        rows: n,
        treated,
        control: n - treated,
        scaling,
        cohort,
    })
}

/// Write a cohort in the ingest layout (covariates as stored).
pub fn write_cohort_csv<W: std::io::Write>(cohort: &Cohort, out: W, path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["id".to_string(), "w".into(), "a".into(), "d".into()];
    header.extend(cohort.covariate_names.iter().cloned());
    wtr.write_record(&header).map_err(|e| csv_err(path, e))?;
    for i in 0..cohort.len() {
        let mut rec = vec![
            cohort.ids[i].clone(),
            cohort.w[i].to_string(),
            cohort.a[i].to_string(),
            cohort.d[i].to_string(),
        ];
        rec.extend(cohort.covariates.row(i).iter().map(|&v| format_real(v)));
        wtr.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Numeric table with a header row, e.g. a covariate pool.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(file);
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for (j, field) in rec.iter().enumerate() {
            let v = super::write::parse_real(field)
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Value {
                    row: r + 1,
                    message: format!("column '{}' is not a finite number: '{field}'", names[j]),
                })?;
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Schema(format!(
            "{} has no data rows",
            path.display()
        )));
    }
    Ok((
        names.clone(),
        DMatrix::from_row_slice(rows, names.len(), &values),
    ))
}

pub fn write_matrix_csv<W: std::io::Write>(
    names: &[&str],
    x: &DMatrix<f64>,
    out: W,
    path: &Path,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(names).map_err(|e| csv_err(path, e))?;
    for row in x.row_iter() {
        wtr.write_record(row.iter().map(|&v| format_real(v)))
            .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
