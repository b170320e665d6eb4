use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad user input: parameters out of range, malformed tables.
    Input,
    /// The physical model has no meaningful answer (non-normalizable state,
    /// disconnected ladder, undefined statistic).
    Physics,
    /// A numerical method failed to reach its tolerance.
    Numerics,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid spectral table: {0}")]
    InvalidTable(String),

    #[error("level {n} outside 0..={n_max}")]
    LevelOutOfRange { n: usize, n_max: usize },

    #[error("component is not thermal; the KMS ratio is only defined for thermal baths")]
    NotThermal,

    #[error(
        "non-normalizable infinite-temperature state: every ladder ratio is 1, \
         all Fock states are equally populated (classical noise alone cannot reach a steady state)"
    )]
    NonNormalizable,

    #[error(
        "state too hot for weak-coupling truncation: population tail ratio {tail_ratio:e} \
         still above tolerance at the level cap {cap}"
    )]
    TruncationCap { cap: usize, tail_ratio: f64 },

    #[error("disconnected ladder: {0}")]
    DisconnectedLadder(String),

    #[error("undefined statistic: {0}")]
    UndefinedStatistic(&'static str),

    #[error("principal value singular: transition frequency {omega} lies on the cutoff {cutoff}")]
    CutoffSingularity { omega: f64, cutoff: f64 },

    #[error("quadrature did not converge: error estimate {estimate:e} above tolerance {tolerance:e}")]
    Quadrature { estimate: f64, tolerance: f64 },

    #[error("no memory time found: |C(t)| = {value:e} >= threshold {threshold:e} at the horizon t = {horizon}")]
    NoMemoryTime {
        threshold: f64,
        horizon: f64,
        value: f64,
    },

    #[error("time integration failed at t = {t}: achieved local error {achieved:e}")]
    Integrator { t: f64, achieved: f64 },

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("dense reference limited to n_max <= {limit}, requested {requested}")]
    OracleTooLarge { limit: usize, requested: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter(_)
            | Error::InvalidTable(_)
            | Error::LevelOutOfRange { .. }
            | Error::NotThermal
            | Error::OracleTooLarge { .. }
            | Error::Io { .. } => ErrorCategory::Input,
            Error::NonNormalizable
            | Error::TruncationCap { .. }
            | Error::DisconnectedLadder(_)
            | Error::UndefinedStatistic(_)
            | Error::CutoffSingularity { .. } => ErrorCategory::Physics,
            Error::Quadrature { .. }
            | Error::NoMemoryTime { .. }
            | Error::Integrator { .. }
            | Error::Linalg(_) => ErrorCategory::Numerics,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
