use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {z} lies within tolerance of a pole")]
    PoleHit { z: Complex64 },

    #[error("ill-conditioned computation: {0}")]
    IllConditioned(String),

    #[error("numerical rank undetermined: singular value ratio {ratio:e} is within a factor 10 of the rank tolerance {rank_tol:e}")]
    RankUndetermined { ratio: f64, rank_tol: f64 },

    #[error("insufficient coefficient window: {0}")]
    InsufficientWindow(String),

    #[error("matrix R0 - gamma Q B - lambda I is singular")]
    DSingular,

    #[error("determinant polynomial vanishes identically")]
    DegenerateDet,

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("invalid realization: {0}")]
    InvalidRealization(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;
