use thiserror::Error;

/// Errors produced by the construction, certification and search operations.
///
/// Variants split into user errors (`InvalidArgument`), computational
/// refusals (`Range`, `Depth`, `BudgetExceeded`, `Indecisive*`) and integrity
/// failures that indicate corrupted or inconsistent sequence data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} is outside the built range; rebuild with depth >= {needed}")]
    Range { what: String, needed: usize },

    #[error("truncation level {k} too deep for the built sequence; rebuild with depth >= {needed}")]
    Depth { k: usize, needed: usize },

    #[error("enclosure too wide to decide {context} after maximal refinement")]
    IndecisiveEnclosure { context: String },

    #[error("decay target does not satisfy the strict bound phi(t) < t^-n at t = {t}")]
    DecayPrecondition { t: String },

    #[error("constant coefficient undecidable at maximal truncation depth: {0}")]
    IndecisiveDepth(String),

    #[error("construction integrity violated: {0}")]
    ConstructionIntegrity(String),

    #[error("certificate refused: check '{check}' failed ({detail})")]
    CertificateRefused { check: String, detail: String },

    #[error("search budget exceeded: {required} candidates needed, budget is {budget}")]
    BudgetExceeded { required: String, budget: u64 },

    #[error("sequence file rejected: {0}")]
    InvalidFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
