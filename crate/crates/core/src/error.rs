use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("angle is not finite")]
    NonFinite,

    #[error("intersection {0} does not exist")]
    UnknownIntersection(usize),

    #[error("approach heading is not aligned with a road into intersection {0}")]
    NotAligned(usize),

    #[error("intersection {0} has no traversable exit")]
    NoExit(usize),

    #[error("no start/goal pair with separation in [{min_m}, {max_m}] m after {attempts} attempts")]
    InfeasibleBand {
        min_m: f64,
        max_m: f64,
        attempts: usize,
    },

    #[error("intersection decision needs at least one option")]
    NoOptions,

    #[error("no data: {0}")]
    NoData(&'static str),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o: {0}")]
    Io(String),

    #[error("schema: {0}")]
    Schema(String),

    #[error("worker pool: {0}")]
    Pool(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
