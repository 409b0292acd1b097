use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// Parameter outside the support of its prior.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("empty dataset: {0}")]
    Empty(String),

    /// Non-finite intermediate, failed factorisation, no convergence.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("malformed input: {0}")]
    Parse(String),

    /// Rejection sampling ran out of attempts. Carries the work done so far.
    #[error("ABC budget exhausted after {attempts} attempts ({accepted} accepted)")]
    BudgetExhausted {
        attempts: usize,
        accepted: usize,
        partial: Box<crate::abc::PosteriorSample>,
        best: Option<(Vec<f64>, f64)>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is numerical rather than caused by bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_) | Error::BudgetExhausted { .. })
    }
}
