use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the formula or type.
    #[error("domain error: {0}")]
    Domain(String),

    /// A call made without its precondition holding.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Time integration broke down.
    #[error("solver failure at step {step} (t = {t} min): {reason}")]
    Solver { step: u64, t: f64, reason: String },

    /// A sweep cell failed; wraps the underlying solver error.
    #[error("sweep cell (alpha = {alpha}, sigma = {sigma}) failed: {source}")]
    SweepCell {
        alpha: f64,
        sigma: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("missing dataset rows: {}", .0.join(", "))]
    MissingRows(Vec<String>),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures of the numerical integration itself, as opposed to
    /// bad inputs.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::Solver { .. } => true,
            Error::SweepCell { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
