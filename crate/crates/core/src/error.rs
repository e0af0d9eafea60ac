use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("token sequence is empty")]
    EmptySequence,
    #[error("no vocabulary word within edit distance {max_distance} of {word:?}")]
    EmptyNeighborhood { word: String, max_distance: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible cardinality bounds: {0}")]
    InfeasibleBounds(String),
    #[error("invalid number of clusters k={k} (must be between 1 and {max})")]
    InvalidK { k: usize, max: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("black box failure{}: {reason}", index.map(|i| alloc::format!(" at input {i}")).unwrap_or_default())]
    BlackBoxFailure { index: Option<usize>, reason: String },
    #[error("external perturber unavailable: {0}")]
    ExternalPerturberUnavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
}

impl Error {
    pub fn black_box(index: Option<usize>, reason: impl Into<String>) -> Self {
        Error::BlackBoxFailure { index, reason: reason.into() }
    }
}
