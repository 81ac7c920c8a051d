use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite coordinate at point {point}, coordinate {coord}")]
    NonFinite { point: usize, coord: usize },

    /// The similarity matrix is not numerically positive definite. Usually
    /// caused by near-duplicate points or an extreme scale.
    #[error(
        "cholesky factorization failed at pivot {pivot} (pivot value {pivot_value:e}, condition hint {condition_hint:e})"
    )]
    CholeskyFailure {
        pivot: usize,
        pivot_value: f64,
        condition_hint: f64,
    },

    #[error("{which} solve failed: {source}")]
    Solve {
        which: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("points {first} and {second} are closer than the separation threshold ({distance:e})")]
    CoincidentPoints {
        first: usize,
        second: usize,
        distance: f64,
    },

    #[error("symmetric eigensolver did not converge within {iterations} iterations")]
    EigenNoConvergence { iterations: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn in_solve(self, which: &'static str) -> Self {
        Error::Solve {
            which,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerical core (factorization, eigensolver,
    /// separation), as opposed to input or shape problems.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::CholeskyFailure { .. }
            | Error::CoincidentPoints { .. }
            | Error::EigenNoConvergence { .. } => true,
            Error::Solve { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_shape(&self) -> bool {
        match self {
            Error::DimensionMismatch { .. } => true,
            Error::Solve { source, .. } => source.is_shape(),
            _ => false,
        }
    }
}
