use thiserror::Error;

use crate::mind::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),

    #[error("concept set contains indices outside a space of {space} concepts")]
    OutsideSpace { space: usize },

    #[error("unknown signal token `{0}`")]
    UnknownToken(String),

    #[error("invalid concept space: {0}")]
    InvalidSpace(String),

    #[error("invalid mind: {0}")]
    InvalidMind(Box<ValidationReport>),

    #[error("invalid signal system: {0}")]
    InvalidSignals(String),

    #[error("invalid scenario field `{field}`: {reason}")]
    InvalidScenario { field: String, reason: String },

    #[error("{what} exceeded cap of {cap}")]
    CapExceeded { what: &'static str, cap: usize },

    #[error("history has zero probability under the prior and strategy")]
    ZeroProbability,

    #[error("script row for target `{target}` exhausted at round {round}")]
    ScriptExhausted { target: String, round: usize },

    #[error("no signal targets concept `{0}`")]
    MissingToken(String),

    #[error("concept `{0}` lies outside the understanding horizon")]
    Unreachable(String),

    #[error("family is not an axiom-based learning space: {0}")]
    NotLearningSpace(String),

    #[error("closure oracle violates {axiom} at subset {subset:#b}")]
    ClosureAxiom { axiom: &'static str, subset: u64 },

    #[error("first state is not a subset of the second")]
    NotNested,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("kernel distribution does not sum to one (sum = {0})")]
    BadKernel(f64),

    #[error("history node {0} is a leaf")]
    LeafNode(usize),

    #[error("audit requires identification on every path, but some path is unidentified by the horizon")]
    MissingIdentification,

    #[error("{message} (line {line})")]
    Parse { message: String, line: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors that stem from an enumeration cap.
    pub fn is_cap_exceeded(&self) -> bool {
        matches!(self, Error::CapExceeded { .. })
    }
}
