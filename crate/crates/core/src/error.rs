use alloc::vec::Vec;

/// Errors raised by the core numerics.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("uniform disorder width must satisfy 0 <= W < 2, got {0}")]
    DisorderTooWide(f64),

    #[error("gaussian disorder kept drawing non-positive couplings ({0} rejections in a row)")]
    TooManyRejections(u32),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cell index {index} out of range 1..={max}")]
    CellOutOfRange { index: usize, max: usize },

    #[error("matrix is not symmetric: H[{row}][{col}] != H[{col}][{row}]")]
    NotSymmetric { row: usize, col: usize },

    #[error("eigensolver did not converge within {max_iterations} iterations")]
    NoConvergence { max_iterations: usize },

    #[error("flat band has {found} zero modes, expected at least {expected}; smallest |E|: {near_zero:?}")]
    BrokenDegeneracy {
        found: usize,
        expected: usize,
        near_zero: Vec<f64>,
    },

    #[error("zero mode leaks onto the b sublattice: max amplitude {0:e}")]
    SublatticeLeak(f64),

    #[error("|f_R| = {0} exceeds 1; evolution is not unitary")]
    NotUnitary(f64),

    #[error("histogram needs at least one finite value")]
    EmptyHistogram,

    #[error("invalid histogram bins: {0}")]
    InvalidBins(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
