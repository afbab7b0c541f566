use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expression parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("field `{0}` has no symbolic form")]
    NotSymbolic(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate loop: {0}")]
    DegenerateLoop(String),

    #[error("loop with winding ({0}, {1}) is not contractible; prequantum holonomy is only defined for contractible torus loops")]
    NonContractibleLoop(i64, i64),

    #[error("action {action} is too small to rescale onto a Bohr–Sommerfeld level")]
    AreaTooSmall { action: f64 },

    #[error("surface is not prequantizable: total area {area} is not a positive integer")]
    NotPrequantizable { area: f64 },

    #[error("symplectic pairing is singular (min singular value {min_singular_value:e})")]
    SingularPairing { min_singular_value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state is not normalized: norm {norm}")]
    NonUnitState { norm: f64 },

    #[error("implicit midpoint Newton solve diverged at t = {time} (residual {residual:e})")]
    NewtonDivergence { time: f64, residual: f64 },
}
