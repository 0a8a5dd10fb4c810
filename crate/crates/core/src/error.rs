use thiserror::Error;

/// Errors raised by the analysis library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid grid size {0}: must be a power of two and at least 8")]
    InvalidGrid(usize),
    #[error("invalid arc: {0}")]
    InvalidArc(String),
    #[error("dyadic level {level} out of range 0..={max}")]
    LevelOutOfRange { level: usize, max: usize },
    #[error("max Fourier index {max_index} aliases on a grid of {n_points} points")]
    Aliasing { max_index: usize, n_points: usize },
    #[error("unknown builtin weight `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("sample {index} is not Hermitian (asymmetry {asymmetry:e})")]
    NonHermitian { index: usize, asymmetry: f64 },
    #[error("sample {index} is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { index: usize, min_eigenvalue: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("point with radius {0} is not inside the open unit disk")]
    OutsideDisk(f64),
    #[error("step {step} too large for radius {radius}")]
    StepTooLarge { step: f64, radius: f64 },
    #[error("operation requires a scalar (d = 1) weight, got d = {0}")]
    NotScalar(usize),
    #[error("average over arc {arc} is not positive definite")]
    DegenerateAverage { arc: String },
    #[error("Gram matrix not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    GramNotPositiveDefinite { min_eigenvalue: f64 },
    #[error("Fourier table covers |n| <= {available}, need {required}")]
    InsufficientCoverage { required: usize, available: usize },
    #[error("factor is singular at {0}")]
    SingularFactor(String),
    #[error("polar grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("zero function: {0}")]
    ZeroFunction(String),
    #[error("radius {radius} exceeds probe limit {limit}")]
    RadiusBeyondProbeLimit { radius: f64, limit: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// True when the error means the input weight itself is unusable.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::UnknownBuiltin(_)
                | Error::InvalidParams(_)
                | Error::NonHermitian { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::DimensionMismatch(_)
                | Error::Parse { .. }
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
