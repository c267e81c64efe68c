use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("relation is not dissipative (margin {margin:e})")]
    NotDissipative { margin: f64 },

    #[error("relation is not symmetric and nonnegative ({0})")]
    NotSymmetricNonnegative(String),

    #[error("relation is not selfadjoint and nonnegative ({0})")]
    NotSelfadjointNonnegative(String),

    #[error("operator is not a contraction (norm {norm})")]
    NotContraction { norm: f64 },

    #[error("impedance is not accretive: Re z = {value:e} at {location}")]
    NotAccretive { value: f64, location: String },

    #[error("quadrature under-resolved: Gram residual {residual:e} exceeds {tolerance:e}")]
    QuadratureUnderResolved { residual: f64, tolerance: f64 },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
