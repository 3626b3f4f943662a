use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("objects live on different grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The ambiguity set has no member on the grid.
    #[error("ambiguity set is infeasible on this grid")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("linear program dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Target moments sit on the boundary of the achievable moment polytope.
    #[error("target moments are not interior (margin {margin})")]
    NotInterior { margin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
