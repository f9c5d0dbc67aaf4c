use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("spectral radius {0} is not below one")]
    SpectralRadiusViolation(f64),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("trajectory length {len} must exceed dimension {dim}")]
    ShortTrajectory { len: usize, dim: usize },
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("Lyapunov iteration did not converge after {0} iterations")]
    NonConvergent(usize),
    #[error("unsupported system spec: {0}")]
    UnsupportedSpec(String),
    #[error("covariance is singular (condition number {0:e})")]
    SingularCovariance(f64),
    #[error("2x2 Gram matrix is singular")]
    SingularGram,
    #[error("matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("problem too large: {0}")]
    TooLarge(String),
    #[error("need at least two dimensions, got {0}")]
    InsufficientPoints(usize),
    #[error("statistic not registered: {0}")]
    StatisticNotRegistered(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
