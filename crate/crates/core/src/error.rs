use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {value} outside the modulus domain [0, {radius}]")]
    Range { value: f64, radius: f64 },

    #[error("invalid modulus: {0}")]
    InvalidModulus(String),

    #[error("inconclusive Dini test: {0}")]
    Inconclusive(String),

    #[error("modulus is not Dini (partial integral {witness} exceeded threshold)")]
    NotDini { witness: f64 },

    #[error("no admissible dyadic radius above 2^-{max_exponent}")]
    Precision { max_exponent: u32 },

    #[error("invalid ellipticity pair (lambda = {lambda}, Lambda = {big_lambda})")]
    Ellipticity { lambda: f64, big_lambda: f64 },

    #[error("operation not applicable: {0}")]
    NotApplicable(String),

    #[error("grid resolution error at node ({i}, {j}): {reason}")]
    Resolution { i: i64, j: i64, reason: String },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:e}); tail {tail:?}")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        tail: Vec<f64>,
    },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
