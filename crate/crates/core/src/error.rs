use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty signalset")]
    EmptySignalSet,

    #[error("channel mismatch: {0}")]
    ChannelMismatch(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("missing manifest at {0}")]
    MissingManifest(PathBuf),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("undefined SNR on silent channel {0}")]
    SilentChannel(usize),

    #[error("signal too short: length {len} cannot be decomposed to {levels} levels")]
    SignalTooShort { len: usize, levels: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data contains a single class")]
    SingleClass,

    #[error("solver stalled after {0} iterations")]
    SolverStalled(usize),

    #[error("detectors require clean data")]
    ContaminatedTraining,

    #[error("missing channel {0}")]
    MissingChannel(usize),

    #[error("class {class} has {count} samples, need at least {needed}")]
    ClassTooSmall {
        class: usize,
        count: usize,
        needed: usize,
    },

    #[error("no valid codebook after {0} draws")]
    CodebookUnreachable(usize),

    #[error("too few non-zero differences ({0}) for the signed-rank test")]
    TooFewPairs(usize),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
