use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point} lies outside the domain of `{field}`")]
    OutsideDomain { field: String, point: String },

    #[error("time {0} is not below 1/4, outside the image of phi")]
    OutsidePhiImage(f64),

    #[error("kernel evaluated at coincident or too-close times (t - s = {0:e})")]
    NearAnchor(f64),

    #[error("point lies outside the ball ({0})")]
    OutsideBall(String),

    #[error("insufficient margin: {0}")]
    InsufficientMargin(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unknown catalog id `{0}`")]
    UnknownField(String),

    #[error("kernel family {0} is unbounded near the anchor")]
    UnboundedKernel(String),

    #[error("incompatible kernel and ball: {0}")]
    Incompatible(String),

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e})")]
    ToleranceNotReached { tol: f64, estimate: f64 },

    #[error("deterministic quadrature supports n <= 2, got n = {0}")]
    UnsupportedDimension(usize),

    #[error("stability guard violated: dt = {dt:e} exceeds {limit:e}")]
    Unstable { dt: f64, limit: f64 },

    #[error("linear solve did not converge (residual {0:e})")]
    NoConvergence(f64),

    #[error("unbounded Harnack ratio: lhs = {0}, rhs = 0")]
    UnboundedRatio(f64),

    #[error("precondition violated: {0}")]
    Precondition(String),
}
