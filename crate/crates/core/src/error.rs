use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape constraint violated: {0}")]
    Shape(String),

    #[error("not poised: condition estimate {condition:.3e} exceeds {threshold:.1e}")]
    NotPoised { condition: f64, threshold: f64 },

    #[error("relaxed value gamma[{index}] = {gamma} is farther than {bound} from f = {value}")]
    AssumptionViolated {
        index: usize,
        gamma: f64,
        value: f64,
        bound: f64,
    },

    #[error("iteration cap reached while improving geometry; best lambda {best_lambda:.6}")]
    IterationCap { best_lambda: f64 },

    #[error("grid oracle budget exceeded: {0}")]
    GridBudget(String),

    #[error("unknown test function `{0}`")]
    UnknownFunction(String),

    #[error("missing constant: {0}")]
    MissingConstant(&'static str),

    #[error("domain violation: {0}")]
    Domain(String),

    #[error("{path}: row {row}: {msg}")]
    Parse { path: String, row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the mathematics (geometry, assumptions) rather
    /// than of usage or I/O.
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::NotPoised { .. } | Error::AssumptionViolated { .. } | Error::IterationCap { .. }
        )
    }
}
