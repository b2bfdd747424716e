use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("cannot parse {0}: {1}")]
    Parse(PathBuf, #[source] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot serialize metadata: {0}")]
    Metadata(#[from] toml::ser::Error),
    #[error(transparent)]
    Core(#[from] commlearn::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;
