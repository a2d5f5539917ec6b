use thiserror::Error;

/// Errors produced by the geometry, sampling and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("support function queried with the zero direction")]
    ZeroDirection,
    #[error("point is not on the boundary (residual {residual:.3e})")]
    NotOnBoundary { residual: f64 },
    #[error("point lies on an edge or vertex of the cube; normal undefined")]
    EdgePoint,
    #[error("no analytic value for {what}")]
    NoAnalyticValue { what: String },
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("iteration cap exceeded (residual {residual:.3e})")]
    IterationCap { residual: f64 },
    #[error("rejection envelope violated: {0}")]
    Envelope(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error("no rolling ball: the curvature asymptotics do not apply, only the polytope-order bounds hold")]
    NoRollingBall,
    #[error("route not applicable: {0}")]
    Route(String),
    #[error("missing calibration for c^({j},{d})")]
    MissingCalibration { j: usize, d: usize },
    #[error("degenerate hull facet {facet:?}")]
    DegenerateFacet { facet: [usize; 3] },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
