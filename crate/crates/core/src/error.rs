use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("point {0:?} lies outside the chart domain")]
    OutOfDomain(Vec<f64>),
    #[error("derivative order {0} is not supported (maximum 3)")]
    OrderUnsupported(usize),
    #[error("metric is singular")]
    SingularMetric,
    #[error("dimension too small: {0}")]
    DimensionTooSmall(String),
    #[error("tractor kind mismatch: expected {expected}, got {got}")]
    KindMismatch { expected: String, got: String },
    #[error("candidate is not Sasaki-Einstein: {0}")]
    NotSasakiEinstein(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("tau vanishes at the requested point")]
    TauVanishes,
    #[error("restricted Hessian is degenerate on the boundary")]
    DegenerateBoundary,
    #[error("form is not contact at the requested point")]
    NotContact,
    #[error("connection is not compatible with the contact distribution (misfit {0:e})")]
    IncompatibleConnection(f64),
    #[error("connection is not k-adapted (divergence {0:e})")]
    NotAdapted(f64),
    #[error("nu(k) vanishes; H is not a complement")]
    DegenerateNu,
    #[error("slice is not transverse to k")]
    NonTransverseSlice,
    #[error("fibre coordinate z0 vanishes")]
    ZeroFiberCoordinate,
    #[error("ambient metric is singular")]
    SingularAmbient,
    #[error("unknown scenario '{0}'")]
    UnknownScenario(String),
    #[error("unknown check '{0}'")]
    UnknownCheck(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("i/o failure: {0}")]
    IoFailure(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;
