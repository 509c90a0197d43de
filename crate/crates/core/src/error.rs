use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has a non-finite entry")]
    NonFinite,

    #[error("Bloch vector has norm {0} > 1")]
    UnphysicalBloch(f64),

    #[error("matrix is not Hermitian (max |M - M^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("POVM has no effects")]
    EmptyPovm,

    #[error("POVM effects do not sum to identity (max deviation {0:e})")]
    IncompletePovm(f64),

    #[error("outcome {index} has negative probability {value:e}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("parameter {name} = {value} is out of range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("ensemble is degenerate (r sin(theta) = 0); no shadow states are needed")]
    DegenerateEnsemble,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("row {row} of channel is not a probability vector (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },

    #[error("channel entry ({row}, {col}) = {value} lies outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("invalid figure of merit: {0}")]
    InvalidMerit(String),

    #[error("priors must be uniform for this operation")]
    NonUniformPriors,

    #[error("priors do not form a probability vector (sum {0})")]
    InvalidPriors(f64),

    #[error("orbit sum of the seed effect stayed singular after {0} draws")]
    SingularOrbit(usize),

    #[error("{0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
