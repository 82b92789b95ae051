use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("curvature of the log-posterior is singular ({0}); use a proper prior such as Cauchy(0, 2.5) or a ridge prior")]
    SingularCurvature(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("infeasible design: {0}")]
    InfeasibleDesign(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not supported: {0}")]
    NotSupported(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("value error on row {row}: {message}")]
    Value { row: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("refusing to overwrite {0} (pass --force)")]
    Exists(PathBuf),

    #[error("[{stage}] {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Attach a pipeline stage name to an error.
pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
