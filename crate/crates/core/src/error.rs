use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("size mismatch: expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("under-resolved: {0}")]
    UnderResolved(String),

    #[error("field is identically zero; spectral fraction undefined")]
    ZeroField,

    #[error("energy has imaginary part {imag:e} exceeding tolerance {tolerance:e}; H0 action corrupted")]
    NonHermitian { imag: f64, tolerance: f64 },

    #[error(
        "current divergence vanishes everywhere: no gauge function built from it can change the energy"
    )]
    NoCurrentDivergence,

    #[error("dense oracle limited to {max} grid points, got {got}")]
    GridTooLarge { max: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
