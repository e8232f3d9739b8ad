use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: score {value} for {word:?} outside [{min}, {max}]")]
    OutOfRange {
        line: usize,
        word: String,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("line {line}: duplicate entry {word:?}")]
    Duplicate { line: usize, word: String },

    #[error("empty vocabulary: no word reaches min_count {min_count}")]
    EmptyVocabulary { min_count: usize },

    #[error("label {0:?} has no surface form in the model vocabulary")]
    LabelNotInVocabulary(String),

    #[error("concept {0:?} has no member word in the model vocabulary")]
    EmptyConcept(String),

    #[error("model is already postprocessed")]
    AlreadyPostprocessed,

    #[error("model is not postprocessed")]
    NotPostprocessed,

    #[error("cannot normalize zero vector for word {0:?} after centering")]
    DegenerateVector(String),

    #[error("no lexicon entry among the nearest neighbors")]
    NoLexiconNeighbors,

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model file: {0}")]
    Format(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),

    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("missing {what}: {path} (run `{step}` first?)")]
    MissingArtifact {
        what: String,
        path: PathBuf,
        step: String,
    },

    #[error("empty corpus")]
    EmptyCorpus,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// Whether the error stems from user input (configuration, data files)
    /// rather than a defect or environment failure.
    pub fn is_user_error(&self) -> bool {
        match self {
            Error::Io { source, .. } => matches!(
                source.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied
            ),
            Error::InFile { source, .. } => source.is_user_error(),
            Error::Parse { .. }
            | Error::OutOfRange { .. }
            | Error::Duplicate { .. }
            | Error::EmptyVocabulary { .. }
            | Error::LabelNotInVocabulary(_)
            | Error::EmptyConcept(_)
            | Error::NoLexiconNeighbors
            | Error::InvalidInput(_)
            | Error::Format(_)
            | Error::Json(_)
            | Error::Config(_)
            | Error::MissingArtifact { .. }
            | Error::EmptyCorpus => true,
            Error::AlreadyPostprocessed
            | Error::NotPostprocessed
            | Error::DegenerateVector(_)
            | Error::Singular(_) => false,
        }
    }

    pub(crate) fn in_file(path: impl Into<PathBuf>, source: Error) -> Self {
        match source {
            e @ (Error::Io { .. } | Error::InFile { .. }) => e,
            e => Error::InFile {
                path: path.into(),
                source: Box::new(e),
            },
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}
