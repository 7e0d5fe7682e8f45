use thiserror::Error;

/// Every failure the engine reports. Variants carry enough context to
/// point at the offending variable, edge or file location.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown variable {0}")]
    UnknownVariable(usize),
    #[error("unknown edge {0}")]
    UnknownEdge(usize),
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("instance has no constraints")]
    EmptyInstance,
    #[error("hypergraph mismatch: {0}")]
    HypergraphMismatch(String),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("label {label} is not in the alphabet of variable {var}")]
    InvalidLabel { var: usize, label: String },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("no certified ({n}, {d0}) expander found")]
    ExpanderNotFound { n: usize, d0: usize },
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("graph is not regular")]
    NotRegular,
    #[error("graph is not connected")]
    NotConnected,
    #[error("cycle length {0} is not even (or below 4)")]
    OddLength(usize),
    #[error("instance has a non-binary constraint at edge {0}")]
    NonBinaryInstance(usize),
    #[error("assignment tester too large: {0}")]
    TesterTooLarge(String),
    #[error("codeword block missing for variable {0}")]
    BlockMissing(usize),
    #[error("not a label-cover instance: {0}")]
    NotLabelCover(String),
    #[error("not an E3SAT instance: {0}")]
    NotE3Sat(String),
    #[error("arity {0} exceeds the sparsification limit")]
    ArityTooHigh(usize),
    #[error("vertex set is not a clique")]
    NotAClique,
    #[error("clique induces inconsistent labels")]
    InconsistentClique,
    #[error("support of size {0} exceeds the transport cap")]
    SupportTooLarge(usize),
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
