use std::fmt;
use std::path::Path;

use reanchor::anchors::AnchorError;
use reanchor::backends::BackendError;
use reanchor::featurepool::PoolError;
use reanchor::maskmedia::MaskError;
use reanchor::metrics::MetricsError;
use reanchor::synth::SynthError;
use reanchor::tracker::TrackError;

/// Failure of a command, classified by exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad flags, configuration or scenario parameters (exit 1).
    Usage(String),
    /// Unreadable, missing or malformed data (exit 2).
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

macro_rules! data_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_error!(
    AnchorError,
    BackendError,
    PoolError,
    MaskError,
    MetricsError,
    TrackError,
    serde_json::Error,
    csv::Error
);

pub type CliResult<T> = Result<T, CliError>;
