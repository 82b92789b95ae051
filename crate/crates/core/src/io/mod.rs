//! Cohort ingestion, run configuration, the end-to-end analysis and
//! result files.

mod config;
mod ingest;
mod pipeline;
mod write;

pub use config::{
    DataSection, Mode, OutputSection, PoolingSection, RunConfig, SensitivitySection,
    SimulationSection,
};
pub use ingest::{
    ingest_csv, ingest_reader, read_matrix_csv, write_cohort_csv, write_matrix_csv, IngestedCohort,
    REQUIRED_COLUMNS,
};
pub use pipeline::{
    emit_report, run_analysis, write_draws, write_estimates, write_json, AnalysisResults,
    ArmFitSummary, CheckSummary, DesignSummary, DrawTable, EstimateKind, EstimateRow, Manifest,
    ReportPaths, ESTIMATE_COLUMNS,
};
pub(crate) use write::csv_err;
pub use write::{format_opt, format_real, parse_real, write_atomic};
