use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("lag underflow: {0}")]
    LagUnderflow(String),

    #[error("underdetermined fit: {samples} samples for {unknowns} unknowns per row")]
    Underdetermined { samples: usize, unknowns: usize },

    #[error("non-finite data: {0}")]
    NonFinite(String),

    #[error("dense eigenproblem of size {size} exceeds the limit of {limit}")]
    TooLarge { size: usize, limit: usize },

    #[error("degenerate matrix pencil: {0}")]
    DegeneratePencil(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("sample error: {0}")]
    Samples(String),

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("rank error: requested {requested} modes but numerical rank is {rank}")]
    Rank { requested: usize, rank: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
