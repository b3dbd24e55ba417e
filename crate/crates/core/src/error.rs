use thiserror::Error;

/// Errors raised by validation, channel algebra and the optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("TP violation {0:.1e}")]
    TracePreservation(f64),

    #[error("not an isometry (deviation {0:.1e})")]
    NotIsometry(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("ensemble weights invalid: {0}")]
    InvalidEnsemble(String),

    #[error("zero state after truncation")]
    ZeroTruncation,

    #[error("degenerate transport: atom {atom} has trace {trace:.3e}")]
    DegenerateTransport { atom: usize, trace: f64 },

    #[error("projector sequence invalid: {0}")]
    InvalidProjectors(String),

    #[error("infinite relative entropy (support violation)")]
    InfiniteRelativeEntropy,

    #[error("infeasible constraint: minimal achievable energy {min_energy} exceeds bound {bound}")]
    Infeasible { min_energy: f64, bound: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
