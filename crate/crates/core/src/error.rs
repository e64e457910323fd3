use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates a structural invariant.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: String, reason: String },

    /// An index or offset falls outside the supported range.
    #[error("{what} = {value} outside supported range [{min}, {max}]")]
    Range {
        what: &'static str,
        value: i64,
        min: i64,
        max: i64,
    },

    /// A function argument outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An estimator was asked to run outside the model it is derived for.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// True for errors caused by user-supplied parameters rather than runtime failures.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. }
                | Error::Range { .. }
                | Error::Domain(_)
                | Error::Precondition(_)
                | Error::Parse { .. }
        )
    }
}
