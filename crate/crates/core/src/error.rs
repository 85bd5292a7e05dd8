use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("scenario parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown field `{0}`")]
    UnknownField(String),

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("wireless device {0} has no access point to attach to")]
    NoAccessPoint(usize),

    #[error("access point {0} has no provider assigned")]
    MissingProvider(usize),

    #[error("access point {0} has no attached clients")]
    NoClients(usize),

    #[error("node {0} is not an access point")]
    NotAnAccessPoint(usize),

    #[error("contract has {found} channels, graph has {expected} access points")]
    ContractLength { found: usize, expected: usize },

    #[error("invalid channel {0} (must be 1..=11)")]
    InvalidChannel(u8),

    #[error("graph has no access points")]
    EmptyGraph,

    #[error("instance too large for exhaustive search: {n_aps} access points (limit {limit})")]
    InstanceTooLarge { n_aps: usize, limit: usize },

    #[error("objective returned a non-finite value")]
    NonFiniteObjective,

    #[error("no records for {0}")]
    EmptyCell(String),

    #[error("technique `{0}` missing for scenario {1}")]
    MissingTechnique(String, String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error("plan file: {0}")]
    Plan(String),

    #[error("{failed} of {total} cells failed; first error: {first}")]
    FailedCells { failed: usize, total: usize, first: String },
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
}
