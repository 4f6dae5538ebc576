use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {0}: expected 1, 2 or 3")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected} values, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid meshsize {0}: must be finite and positive")]
    InvalidMeshsize(f64),

    #[error("grid needs at least 3 interior points per dimension, got {0}")]
    GridTooSmall(usize),

    #[error("stencil has no nonzero entries")]
    EmptyStencil,

    #[error("stencil offset {offset:?} does not have length {dim}")]
    BadOffset { offset: Vec<i32>, dim: usize },

    #[error("cannot parse coefficient {0:?}")]
    BadCoefficient(String),

    #[error("{what} is not available in {dim}D")]
    Unsupported { what: String, dim: usize },

    #[error("local patch matrix is singular")]
    SingularPatch,

    #[error("no patches could be built on this grid")]
    EmptyPatchSet,

    #[error("dense assembly of {size} unknowns exceeds the cap of {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("no high-frequency samples in the frequency grid")]
    EmptyHighFrequencies,

    #[error("stencil is not symmetric under reflection of each axis")]
    NotReflectionSymmetric,

    #[error("product symbol is not positive ({value}) at theta = {theta:?}")]
    NonPositiveSymbol { theta: Vec<f64>, value: f64 },

    #[error("frequency {0:?} lies outside [-pi/2, pi/2)^d")]
    NotLowFrequency(Vec<f64>),

    #[error("coarse-grid symbol vanishes at theta = {0:?}")]
    SingularCoarseSymbol(Vec<f64>),

    #[error("grid with n = {0} cannot be coarsened (need n = 2^k - 1 >= 7 on a Dirichlet grid)")]
    NotNestable(usize),

    #[error("coarse-grid matrix is not positive definite")]
    SingularCoarseSolve,

    #[error("error fell to rounding level ({ratio:e} reduction) in cycle {cycle}")]
    Stagnation { cycle: usize, ratio: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
