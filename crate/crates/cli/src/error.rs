use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A problem in an experiment file, located as precisely as known.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    /// 1-based.
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl ConfigError {
    pub fn new(origin: &str, line: Option<usize>, field: Option<&str>, message: String) -> Self {
        Self {
            origin: origin.to_string(),
            line,
            field: field.map(str::to_string),
            message,
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, ": field `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Model(#[from] aoi_core::Error),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("tolerance exceeded: {0}")]
    ToleranceExceeded(String),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;
pub const EXIT_TOLERANCE: u8 = 3;

impl CliError {
    /// Bad input is a usage error; a failed computation on valid input is
    /// a numeric failure.
    pub fn exit_code(&self) -> u8 {
        use aoi_core::Error as E;
        match self {
            CliError::Model(
                E::QuadratureFailure { .. } | E::TruncationFailure(_) | E::NoDeliveries { .. },
            ) => EXIT_NUMERIC,
            CliError::ToleranceExceeded(_) => EXIT_TOLERANCE,
            _ => EXIT_USAGE,
        }
    }
}

/// Short status tag written to CSV for a failed grid point.
pub fn status_tag(e: &aoi_core::Error) -> &'static str {
    use aoi_core::Error as E;
    match e {
        E::Unstable { .. } => "unstable",
        E::InvalidParameter(_) => "invalid_parameter",
        E::InfiniteMoment { .. } => "infinite_moment",
        E::NotExponential(_) => "not_exponential",
        E::QuadratureFailure { .. } | E::TruncationFailure(_) => "numeric_failure",
        E::NoDeliveries { .. } => "no_deliveries",
    }
}
