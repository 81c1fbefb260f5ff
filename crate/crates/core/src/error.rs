use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("infeasible CoM fraction {fraction}: {reason}")]
    InfeasibleFraction { fraction: f64, reason: String },

    #[error("parse error at row {row}: {msg}")]
    Parse { row: usize, msg: String },

    #[error("frame count mismatch: expected {expected}, got {actual}")]
    FrameMismatch { expected: usize, actual: usize },

    #[error("provenance mismatch: {0}")]
    ProvenanceMismatch(String),

    #[error("{0} has a static torque, use static_task_wrench instead of object_wrench")]
    WrongOperation(String),

    #[error("combination {0} is not regressable: its torques could not be described by linear models")]
    NonRegressable(String),

    #[error("percentile {0} cannot be predicted by superposition: only the 0th and 100th percentiles of components can be summed")]
    NonAdditivePercentile(u8),

    #[error("no coefficient for {0}")]
    MissingCoefficient(String),

    #[error("coincident axes: |sin(theta_B - theta_A)| = {0:.3e} is below the invertibility guard")]
    CoincidentAxes(f64),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
