use rdproxy::codebook::CodebookError;
use rdproxy::exact::ExactError;
use rdproxy::{ModelError, ProxyError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Instance {
        path: String,
        #[source]
        source: ModelError,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Infeasible(_) => 2,
            _ => 1,
        }
    }
}

impl From<ProxyError> for CliError {
    fn from(e: ProxyError) -> Self {
        match e {
            ProxyError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<ExactError> for CliError {
    fn from(e: ExactError) -> Self {
        match e {
            ExactError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<CodebookError> for CliError {
    fn from(e: CodebookError) -> Self {
        match e {
            CodebookError::ZeroBallMass { .. } | CodebookError::EmptyBall(_) => {
                CliError::Infeasible(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}
