use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing key `{0}`")]
    MissingKey(String),

    #[error("duplicate key `{0}`")]
    DuplicateKey(String),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("invalid value for `{key}` (`{text}`): {reason}")]
    InvalidValue {
        key: String,
        text: String,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("not an equilibrium: residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    NotAnEquilibrium { residual: f64, tolerance: f64 },

    #[error("degenerate stability bound: a - b - 1 = 0")]
    DegenerateBound,

    #[error("divergent orbit at step {step}")]
    DivergentOrbit { step: u64 },

    #[error("insufficient data: {got} recorded samples, need at least {need}")]
    InsufficientData { got: usize, need: usize },

    #[error("suite `{path}`: {reason}")]
    Suite { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
