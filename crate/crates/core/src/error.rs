use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sequence is not log-convex at index {index} (defect {defect:e})")]
    NotLogConvex { index: usize, defect: f64 },

    /// The truncated sup/inf is not attained inside the stored orders.
    #[error("truncation exhausted: {0}")]
    TruncationExhausted(String),

    #[error("mismatched truncation orders {0} and {1}")]
    MismatchedTruncation(usize, usize),

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergent(String),

    #[error("grid under-resolved: spacing {spacing:e} exceeds guard {guard:e}")]
    UnderResolved { spacing: f64, guard: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("derivative oracle exhausted: order {requested} requested, {available} available")]
    OrderExhausted { requested: usize, available: usize },

    #[error("frequency box too small: tail mass {tail_mass:e} exceeds tolerance {tol:e}")]
    FrequencyBoxTooSmall { tail_mass: f64, tol: f64 },

    #[error("polynomial is not elliptic: {0}")]
    NotElliptic(String),

    #[error("singular jacobian at {0:?}")]
    SingularJacobian(Vec<f64>),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("slow-growth gate violated: local exponent {exponent:.3} exceeds {limit:.3}")]
    SlowGrowthViolated { exponent: f64, limit: f64 },

    #[error("extrapolation did not converge: {0}")]
    ExtrapolationFailed(String),

    #[error("vanishing gradient at {0:?}")]
    VanishingGradient(Vec<f64>),

    #[error("integration blew up at t = {0}")]
    Blowup(f64),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
