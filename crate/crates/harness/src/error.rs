use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value failed validation; `field` is the config key.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("failed to parse config: {0}")]
    ConfigSyntax(#[from] toml::de::Error),
    #[error("unknown preset `{name}`; available: {}", available.join(", "))]
    UnknownPreset {
        name: String,
        available: Vec<&'static str>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Trace { path: PathBuf, message: String },
    #[error("cannot plot {field} at t={t}: {message}")]
    Plot {
        t: usize,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] lrsense::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config_err<T>(field: impl Into<String>, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        field: field.into(),
        message: message.into(),
    })
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
