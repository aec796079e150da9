use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (asymmetry {asymmetry:.3e} exceeds {tolerance:.3e})")]
    NonSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("non-finite value encountered")]
    NonFinite,

    #[error("matrix is rank deficient (pivot {pivot:.3e} below {threshold:.3e})")]
    RankDeficient { pivot: f64, threshold: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("measure has no support points")]
    EmptyMeasure,

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("covariance is not positive semidefinite (eigenvalue {eigenvalue:.3e})")]
    NotPsd { eigenvalue: f64 },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("source dimension {d_x} exceeds target dimension {d_y}")]
    DimensionOrder { d_x: usize, d_y: usize },

    #[error("initial point violates the Stiefel constraint (residual {residual:.3e} > {limit:.3e})")]
    InfeasibleInit { residual: f64, limit: f64 },

    #[error("point is not on the Stiefel manifold (residual {residual:.3e})")]
    InfeasiblePoint { residual: f64 },

    #[error("empirical and Gaussian measures cannot be mixed in one objective")]
    MixedBackends,

    #[error("operation needs more than {needed} items, got {got}")]
    TooFewItems { needed: usize, got: usize },

    #[error("affinity matrix has a vanishing degree at row {row}")]
    DegenerateAffinity { row: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },

    #[error("matrix Gram norm vanishes")]
    ZeroMatrix,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("ragged rows: line {line} has {found} fields, expected {expected}")]
    RaggedRows {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("input contains no data rows")]
    EmptyFile,

    #[error("pair ({left}, {right}) failed: {source}")]
    PairFailed {
        left: usize,
        right: usize,
        source: Box<Error>,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
