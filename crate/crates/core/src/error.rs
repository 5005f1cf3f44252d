use thiserror::Error;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing block `{0}` in case file")]
    MissingBlock(String),
    #[error("unsupported cost model: {0}")]
    UnsupportedCost(String),
    #[error("invalid case data: {0}")]
    InvalidData(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("matrix is singular or not positive definite")]
    Singular,
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("parameters are not certified: {0}")]
    Uncertified(String),
    #[error("bad branching request: {0}")]
    Branch(String),
    #[error("result document: {0}")]
    Document(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
