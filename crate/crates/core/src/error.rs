use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input has no observations")]
    EmptyInput,

    #[error("line {line}: expected header `t,y,sigma`, found `{found}`")]
    BadHeader { line: usize, found: String },

    #[error("line {line}: {message}")]
    MalformedRow { line: usize, message: String },

    #[error("line {line}: sigma must be strictly positive, got {value}")]
    NonPositiveSigma { line: usize, value: f64 },

    #[error("line {line}: duplicate observation time {time}")]
    DuplicateTime { line: usize, time: f64 },

    #[error("observation {index}: {message}")]
    InvalidObservation { index: usize, message: String },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("period must be finite and positive, got {0}")]
    NonPositivePeriod(f64),

    #[error("at least {required} observations are needed, got {found}")]
    TooFewObservations { required: usize, found: usize },

    #[error("harmonic design is singular at period {theta} (condition number {condition:e})")]
    SingularDesign { theta: f64, condition: f64 },

    #[error("baseline loss is zero: all values are equal")]
    DegenerateBaseline,

    #[error("bad period range: {0}")]
    BadRange(String),

    #[error("bad tolerance: {0}")]
    BadTolerance(String),

    #[error("mean periodogram power is zero")]
    ZeroMeanPower,

    #[error("exact enumeration needs {size} group elements, limit is {limit}")]
    TooLarge { size: u128, limit: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    /// Errors caused by user input, as opposed to a failed computation.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::EmptyInput
                | Error::BadHeader { .. }
                | Error::MalformedRow { .. }
                | Error::NonPositiveSigma { .. }
                | Error::DuplicateTime { .. }
                | Error::InvalidObservation { .. }
                | Error::LengthMismatch { .. }
                | Error::NonPositivePeriod(_)
                | Error::TooFewObservations { .. }
                | Error::BadRange(_)
                | Error::BadTolerance(_)
                | Error::DegenerateBaseline
                | Error::InvalidConfig(_)
        )
    }
}
