//! One error type per failure class, each tied to its process exit code.

use hetrel::cpgnn::{ModelError, ModelFileError};
use hetrel::eval::EvalError;
use hetrel::hetgraph::GraphError;
use hetrel::measures::MeasureError;

/// Exit codes: 2 for usage and configuration problems, 3 for bad or
/// mismatched data, 4 for numeric failures. Code 1 is reserved for
/// verification runs that found a violation and is produced by `cmd_verify`
/// directly, not through this type.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numeric(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError::Data(message.into())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            // Parameters come from flags or the config file.
            MeasureError::InvalidParameter { .. } | MeasureError::OddWalkLength { .. } => {
                CliError::Usage(e.to_string())
            }
            MeasureError::TooManyWalks { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InvalidConfig { .. } => CliError::Usage(e.to_string()),
            ModelError::NonFiniteActivation { .. }
            | ModelError::NonFiniteLoss { .. }
            | ModelError::Tensor(_) => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelFileError> for CliError {
    fn from(e: ModelFileError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidArgument { .. } => CliError::Usage(e.to_string()),
            EvalError::NoConvergence { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}
