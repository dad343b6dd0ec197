use gfou::levy::GateVerdict;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("existence gate failed: {}", .0.reason)]
    ExistenceGate(GateVerdict),
    #[error("stationarity gate failed: {0}")]
    StationarityGate(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::ExistenceGate(_) | CliError::StationarityGate(_) => 3,
            CliError::Config(_) => 4,
            CliError::Io { .. } | CliError::Run(_) => 1,
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<gfou::process::ProcessError> for CliError {
    fn from(e: gfou::process::ProcessError) -> Self {
        use gfou::process::ProcessError as P;
        match e {
            P::ExistenceGate(v) => CliError::ExistenceGate(v),
            P::StationarityGate(msg) => CliError::StationarityGate(msg),
            P::Spec(msg) => CliError::Config(msg),
            P::Levy(gfou::levy::LevyError::Invalid(msg)) => CliError::Config(msg),
            other => CliError::Run(other.to_string()),
        }
    }
}
