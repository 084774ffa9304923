use std::path::PathBuf;

use randspec_core::calculus::CalculusError;
use randspec_core::field::FieldError;
use randspec_core::linalg::LinalgError;
use randspec_core::measure::MeasureError;
use randspec_core::prob::ProbError;
use randspec_core::transforms::TransformError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema error at `{key}`: {message}")]
    Schema { key: String, message: String },
    #[error("shape error at `{key}`: {message}")]
    Shape { key: String, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn schema(key: impl Into<String>, message: impl ToString) -> Self {
        Self::Schema {
            key: key.into(),
            message: message.to_string(),
        }
    }

    pub(crate) fn shape(key: impl Into<String>, message: impl ToString) -> Self {
        Self::Shape {
            key: key.into(),
            message: message.to_string(),
        }
    }
}
