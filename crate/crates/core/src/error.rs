use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown system kind `{0}` (expected melon, antimelon, combined or xxz)")]
    UnknownKind(String),

    #[error("invalid chain length {0}: an XXZ chain needs at least 2 sites")]
    InvalidChainLength(usize),

    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("spin angles missing or incomplete: expected {expected} sites, found {found}")]
    AnglesMissing { expected: usize, found: usize },

    #[error("operation not supported for system kind {0}")]
    UnsupportedKind(String),

    #[error("invalid Pauli term: {0}")]
    InvalidTerm(String),

    #[error("{n} qubits exceeds the limit of {max}")]
    TooManyQubits { n: usize, max: usize },

    #[error("qubit {qubit} out of range for a {n}-qubit register")]
    QubitOutOfRange { qubit: usize, n: usize },

    #[error("malformed basis label `{0}`")]
    MalformedLabel(String),

    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),

    #[error("step count {0} exceeds the overflow guard")]
    StepOverflow(f64),

    #[error("empty series")]
    EmptySeries,

    #[error("series does not cover [0, {needed}] (ends at {available})")]
    InsufficientCoverage { needed: f64, available: f64 },

    #[error("unknown site label `{0}`")]
    UnknownSiteLabel(String),

    #[error("eigendecomposition failed to converge")]
    Eigen,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
