use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("basis of dimension {d} and order {order} has more than {cap} elements")]
    BasisTooLarge { d: usize, order: usize, cap: usize },

    #[error("multi-index has {got} entries, expected {expected}")]
    IndexDimension { expected: usize, got: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("truncation order mismatch: operator expects {expected}, vector has {got}")]
    TruncationMismatch { expected: usize, got: usize },

    #[error("requested order {requested} exceeds available order {available}")]
    OrderOutOfRange { requested: usize, available: usize },

    #[error("coefficient vector has length {got}, index set has {expected} elements")]
    CoefficientLength { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("coordinate {i} out of range for dimension {d}")]
    CoordinateOutOfRange { i: usize, d: usize },

    #[error("Sobolev indices must satisfy q < p (got p = {p}, q = {q})")]
    IndexOrder { p: f64, q: f64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),

    #[error("matrix of size {size} exceeds the dense limit {limit}")]
    DenseTooLarge { size: usize, limit: usize },

    #[error("eigensolver did not converge after {sweeps} sweeps (residual {residual:e})")]
    EigenNotConverged { sweeps: usize, residual: f64 },

    #[error("implicit system is singular (dt = {dt}, theta = {theta})")]
    SingularSystem { dt: f64, theta: f64 },

    #[error("state blew up at t = {time}{}", path_suffix(.path))]
    BlowUp { path: Option<usize>, time: f64 },

    #[error("translation oracle requires a constant drift (M = 0)")]
    AffineDriftUnsupported,

    #[error("functional `{0}` is not bounded")]
    UnboundedFunctional(String),

    #[error("unknown functional `{0}`")]
    UnknownFunctional(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

fn path_suffix(path: &Option<usize>) -> String {
    path.map(|p| format!(" on path {p}")).unwrap_or_default()
}
