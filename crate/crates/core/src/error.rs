use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("unsupported derivative order {0} (expected 1 or 2)")]
    UnsupportedOrder(u32),

    #[error("L^p exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("field has {got} samples but the grid has {expected} points")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite sample encountered")]
    NonFinite,

    #[error("singular evaluation: denominator modulus {modulus:e} at t = {t}, x = {x}")]
    SingularEvaluation { t: f64, x: f64, modulus: f64 },

    #[error("modulation fit did not converge after {iterations} iterations (residuals {residuals:?})")]
    FitFailure {
        iterations: usize,
        residuals: [f64; 2],
    },

    #[error("degenerate modulation state: determinant {det:e} below threshold")]
    DegenerateState { det: f64 },

    #[error("coefficient `{coefficient}` = {value:e} exceeds its tier bound {bound:e}")]
    TierViolation {
        coefficient: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("need at least 3 recorded snapshots, got {0}")]
    InsufficientSnapshots(usize),

    #[error("dense matrix of size {size} exceeds the limit {limit}")]
    MatrixTooLarge { size: usize, limit: usize },

    #[error("operator/argument mismatch: {0}")]
    KindMismatch(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
