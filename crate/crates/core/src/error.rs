use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature arity mismatch: model expects {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("label index {0} out of range (expected 0, 1 or 2)")]
    LabelOutOfRange(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("non-finite feature value at position {0}")]
    NonFiniteFeature(usize),

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("accuracy window is empty at index {index}")]
    EmptyWindow { index: u64 },

    #[error("instance {got} arrived out of order (expected {expected})")]
    OutOfOrder { expected: u64, got: u64 },

    #[error("prequential ordering violated: {0}")]
    OrderingViolation(String),

    #[error("count mismatch: left + right must equal parent ({0})")]
    CountMismatch(String),

    #[error("unknown route {line}/{direction}")]
    UnknownRoute { line: String, direction: String },

    #[error("position is {distance_m:.1} m from route {line}/{direction}")]
    OffRoute {
        line: String,
        direction: String,
        distance_m: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trace is empty")]
    EmptyTrace,

    #[error("trace invariant violated: {0}")]
    TraceInvariant(String),

    #[error("reports use different checkpoint grids")]
    MismatchedGrid,

    #[error("time {t} outside the simulated range for vehicle {vehicle_id}")]
    OutsideSimulation { vehicle_id: String, t: i64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Errors caused by malformed input (files, configs, instances) as
    /// opposed to broken internal invariants.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInstance(_)
                | Error::NonFiniteFeature(_)
                | Error::LabelOutOfRange(_)
                | Error::EmptyTrainingSet
                | Error::UnknownRoute { .. }
                | Error::OffRoute { .. }
                | Error::InvalidConfig(_)
                | Error::EmptyTrace
                | Error::MismatchedGrid
                | Error::OutsideSimulation { .. }
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
