use std::path::Path;

use bnrisk::analysis::AnalysisError;
use bnrisk::data::DataError;
use bnrisk::inference::InferenceError;
use bnrisk::learning::LearningError;
use bnrisk::model::ModelError;
use thiserror::Error;

/// Everything a command can fail with, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Computation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::Computation(_) => 3,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    /// Prefixes a validation message with the file it came from.
    pub fn in_file(self, path: &Path) -> Self {
        match self {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<LearningError> for CliError {
    fn from(e: LearningError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::ZeroProbabilityEvidence { .. } => CliError::Computation(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::PoolTooLarge { .. } | AnalysisError::ConstantScores => {
                CliError::Computation(e.to_string())
            }
            AnalysisError::Inference(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}
