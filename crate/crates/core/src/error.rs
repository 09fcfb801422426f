use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode index {index} out of range for a layout with {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("spin index {index} out of range for a layout with {spins} spins")]
    SpinOutOfRange { index: usize, spins: usize },

    #[error("layout has no spin")]
    NoSpin,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian (max |A - A^dag| = {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("invalid layout: {0}")]
    InvalidLayout(String),

    #[error("dense operator of dimension {dim} exceeds the dense limit {limit}; use factor-wise operators")]
    DenseTooLarge { dim: usize, limit: usize },

    #[error("Fock cutoff {cutoff} too small: {what} needs at least {required}")]
    CutoffTooSmall {
        cutoff: usize,
        required: usize,
        what: String,
    },

    #[error("truncation violated: population {population:e} on the top Fock levels of mode {mode} (limit {limit:e})")]
    Truncation {
        mode: usize,
        population: f64,
        limit: f64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("spin is not prepared as required: {0}")]
    SpinPreparation(String),

    #[error("constraint violated: {0}")]
    Constraint(String),

    #[error("degenerate fit: {points} data points for {parameters} parameters")]
    DegenerateGrid { points: usize, parameters: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
