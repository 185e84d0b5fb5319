use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("word not in embedding vocabulary: {0:?}")]
    OutOfVocabulary(String),

    #[error("document {doi} has no in-vocabulary tokens")]
    EmptyDocument { doi: String },

    #[error("undefined value: {0}")]
    Undefined(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("fidelity violated for {doi}: document logit {doc_logit} vs mean word logit {mean_word_logit}")]
    Fidelity {
        doi: String,
        doc_logit: f64,
        mean_word_logit: f64,
    },

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::Numeric(_) | Error::Fidelity { .. } => 3,
            _ => 2,
        }
    }
}
