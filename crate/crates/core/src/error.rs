use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping of errors, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Model,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("view mismatch: id `{id}` missing from {view}")]
    ViewMismatch { id: String, view: String },

    #[error("dimension mismatch: expected {expected} values, found {found} (id `{id}`)")]
    DimensionMismatch {
        id: String,
        expected: usize,
        found: usize,
    },

    #[error("empty corpus: no labelled instances")]
    EmptyCorpus,

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("corpus has {0} label(s); training needs at least 2")]
    TooFewLabels(usize),

    #[error("insufficient class support: class `{label}` has {count} instance(s), need at least {k}")]
    InsufficientClassSupport { label: String, count: usize, k: usize },

    #[error("fold index {index} out of range for k = {k}")]
    FoldOutOfRange { index: usize, k: usize },

    #[error("instance `{0}` has no fold assignment")]
    MissingFold(String),

    #[error("empty feature space: no document produced a feature")]
    EmptyFeatureSpace,

    #[error("non-finite feature value at position {0}")]
    NonFiniteFeature(usize),

    #[error("degenerate problem: all training labels are identical")]
    DegenerateProblem,

    #[error("empty problem: no training instances")]
    EmptyProblem,

    #[error("missing view: {0}")]
    MissingView(String),

    #[error("no views selected (threshold {threshold})")]
    NoViewsSelected { threshold: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("view `{0}` has no vocabulary")]
    NoVocabulary(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("not a model file: bad magic")]
    BadMagic,

    #[error("unsupported model format version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },

    #[error("corrupt model file: {0}")]
    CorruptModel(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::BadMagic
            | Error::UnsupportedVersion { .. }
            | Error::CorruptModel(_)
            | Error::NoVocabulary(_) => ErrorKind::Model,
            _ => ErrorKind::Data,
        }
    }

    /// Stable, greppable identifier for the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::ViewMismatch { .. } => "E_VIEW_MISMATCH",
            Error::DimensionMismatch { .. } => "E_DIMENSION_MISMATCH",
            Error::EmptyCorpus => "E_EMPTY_CORPUS",
            Error::DuplicateId(_) => "E_DUPLICATE_ID",
            Error::TooFewLabels(_) => "E_TOO_FEW_LABELS",
            Error::InsufficientClassSupport { .. } => "E_INSUFFICIENT_CLASS_SUPPORT",
            Error::FoldOutOfRange { .. } => "E_FOLD_OUT_OF_RANGE",
            Error::MissingFold(_) => "E_MISSING_FOLD",
            Error::EmptyFeatureSpace => "E_EMPTY_FEATURE_SPACE",
            Error::NonFiniteFeature(_) => "E_NON_FINITE_FEATURE",
            Error::DegenerateProblem => "E_DEGENERATE_PROBLEM",
            Error::EmptyProblem => "E_EMPTY_PROBLEM",
            Error::MissingView(_) => "E_MISSING_VIEW",
            Error::NoViewsSelected { .. } => "E_NO_VIEWS_SELECTED",
            Error::LengthMismatch { .. } => "E_LENGTH_MISMATCH",
            Error::UnknownLabel(_) => "E_UNKNOWN_LABEL",
            Error::NoVocabulary(_) => "E_NO_VOCABULARY",
            Error::InvalidArgument(_) => "E_INVALID_ARGUMENT",
            Error::Parse { .. } => "E_PARSE",
            Error::Io { .. } => "E_IO",
            Error::BadMagic => "E_BAD_MAGIC",
            Error::UnsupportedVersion { .. } => "E_MODEL_VERSION",
            Error::CorruptModel(_) => "E_CORRUPT_MODEL",
        }
    }
}
