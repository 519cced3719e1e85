use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid spec: {0}")]
    InvalidSpec(String),

    #[error("value count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("negative value {value} at cell {cell:?}")]
    NegativeValue { cell: Vec<usize>, value: f64 },

    #[error("non-finite value at cell {cell:?}")]
    NonFiniteValue { cell: Vec<usize> },

    #[error("nonzero value {value} in the boundary layer at cell {cell:?}")]
    BoundaryLayer { cell: Vec<usize>, value: f64 },

    #[error("grid functions live on different grids")]
    SpecMismatch,

    #[error("symmetrized support does not fit inside the box: {nonzero} nonzero cells, {interior} interior cells available before the first boundary cell")]
    SupportExceedsBox { nonzero: usize, interior: usize },

    #[error("integrand evaluated to a non-finite value at cell {cell:?} (s = {s}, t = {t})")]
    NonFiniteIntegrand { cell: Vec<usize>, s: f64, t: f64 },

    #[error("half-space does not contain the origin (offset {0} < 0)")]
    OriginNotContained(f64),

    #[error("invalid half-space: {0}")]
    InvalidHalfSpace(String),

    #[error("certificate does not belong to this grid and half-space")]
    CertificateMismatch,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("integrand does not meet the equality-case hypotheses: {0}")]
    EqualityHypotheses(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
