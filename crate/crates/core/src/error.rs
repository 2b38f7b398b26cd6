use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("frame {frame}: coordinate {value} outside [0, 1]")]
    CoordinateOutOfRange { frame: i64, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("invalid neuron count k={0}, need k >= 1")]
    InvalidK(usize),

    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("no agents in any frame")]
    NoAgents,

    #[error("batch contains no agents")]
    EmptyBatch,

    #[error("no points to cluster")]
    NoPoints,

    #[error("silhouette needs at least 2 clusters, found {0}")]
    SingleCluster(usize),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("unsupported {what} version {found} (expected {expected})")]
    VersionMismatch {
        what: &'static str,
        expected: u32,
        found: u32,
    },

    #[error("corrupt file {path}: {reason}")]
    CorruptFile { path: String, reason: String },

    #[error("parse error at {location}: {reason}")]
    Parse { location: String, reason: String },

    #[error("duplicate frame index {0}")]
    DuplicateFrame(i64),

    #[error("need at least {need} frames, got {got}")]
    TooFewFrames { need: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("output directory {0} is locked by another run")]
    Locked(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable identifier used in machine-readable CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::CoordinateOutOfRange { .. } => "CoordinateOutOfRange",
            Error::NonFinite(_) => "NonFinite",
            Error::InvalidK(_) => "InvalidK",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::NoAgents => "NoAgents",
            Error::EmptyBatch => "EmptyBatch",
            Error::NoPoints => "NoPoints",
            Error::SingleCluster(_) => "SingleCluster",
            Error::EmptyDataset => "EmptyDataset",
            Error::VersionMismatch { .. } => "VersionMismatch",
            Error::CorruptFile { .. } => "CorruptFile",
            Error::Parse { .. } => "ParseError",
            Error::DuplicateFrame(_) => "DuplicateFrame",
            Error::TooFewFrames { .. } => "TooFewFrames",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Locked(_) => "Locked",
            Error::Io { .. } => "Io",
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn length(what: &'static str, expected: usize, actual: usize) -> Self {
        Error::LengthMismatch {
            what,
            expected,
            actual,
        }
    }
}
