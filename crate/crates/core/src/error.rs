use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-positive specific volume v = {0}")]
    NonPositiveVolume(f64),

    #[error("negative density or depth {0}")]
    NegativeDensity(f64),

    #[error("cannot build an invariant region from an empty sample set")]
    EmptySamples,

    #[error("level curves r = {r0} and s = {s0} do not intersect")]
    NoIntersection { r0: f64, s0: f64 },

    #[error("operation `{op}` is not defined for this system")]
    UnsupportedSystem { op: &'static str },

    #[error(
        "cell {cell}: average lies outside the open invariant region \
         (r0 - r = {r_margin:e}, s - s0 = {s_margin:e})"
    )]
    AverageOutsideInterior { cell: usize, r_margin: f64, s_margin: f64 },

    #[error("limiter parameter theta = {0} outside (0, 1]")]
    ThetaOutOfRange(f64),

    #[error("invalid quadrature order {0}")]
    InvalidOrder(usize),

    #[error("reference coordinate {0} outside [-1, 1]")]
    XiOutOfRange(f64),

    #[error("invalid cell-average decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("time step {dt:e} exceeds the certified bound {allowed:e}")]
    CflViolation { dt: f64, allowed: f64 },

    #[error("wave speed bound is zero")]
    DegenerateSigma,

    #[error("decomposition coefficient {name} = {value:e} is negative")]
    NegativeCoefficient { name: String, value: f64 },

    #[error("shock curve radicand {0:e} is negative")]
    NegativeRadicand(f64),

    #[error("Riemann problem has no vacuum-free solution")]
    NoSolution,

    #[error("empty stencil")]
    EmptyStencil,

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error: {0}")]
    Parse(String),
}
