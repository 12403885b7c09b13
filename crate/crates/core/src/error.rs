use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid lattice specification: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error(
        "degenerate ground state: gap {gap:e} between levels {filling} and {next} is below {threshold:e}",
        next = filling + 1
    )]
    DegenerateGroundState {
        gap: f64,
        filling: usize,
        threshold: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid block: {0}")]
    InvalidBlock(String),

    #[error("system of {0} sites is too large for the Fock-space oracle (max {1})")]
    TooLarge(usize, usize),

    #[error("CFL condition violated: dt = {dt} exceeds limit {limit}")]
    Cfl { dt: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
