use std::io;

use thiserror::Error;

use crate::eval::EvalError;
use crate::features::FeatureError;
use crate::ingest::SchemaError;
use crate::model::ModelError;
use crate::rules::RulesError;
use crate::synth::SynthError;
use crate::table::TableError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Rules(#[from] RulesError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("data: {0}")]
    Data(String),
    #[error("internal: {0}")]
    Internal(String),
    #[error("step {index} ({name}): {source}")]
    Step {
        index: usize,
        name: &'static str,
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for schema or configuration problems, 3 for
    /// bad data, 4 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Schema(SchemaError::Csv(_) | SchemaError::Io(_)) => 3,
            Error::Schema(_) | Error::Config(_) | Error::Synth(_) => 2,
            Error::Eval(EvalError::InvalidConfig(_) | EvalError::FoldTooSmall { .. }) => 2,
            Error::Model(ModelError::Format(_) | ModelError::Version(_)) => 2,
            Error::Table(
                TableError::MissingClassColumn(_) | TableError::ClassColumnExcluded(_),
            ) => 2,
            Error::Feature(_)
            | Error::Rules(_)
            | Error::Table(_)
            | Error::Data(_)
            | Error::Json(_) => 3,
            Error::Model(_) | Error::Eval(_) => 3,
            Error::Io { .. } => 3,
            Error::Internal(_) => 4,
            Error::Step { source, .. } => source.exit_code(),
        }
    }
}
