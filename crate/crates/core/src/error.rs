use thiserror::Error;

/// Errors surfaced by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("line {line}: probability out of range: {value}")]
    ProbabilityOutOfRange { line: usize, value: f64 },

    #[error("line {line}: zero-probability fact {fact}")]
    ZeroProbability { line: usize, fact: String },

    #[error("line {line}: duplicate fact {fact}")]
    DuplicateFact { line: usize, fact: String },

    #[error("relation {relation} used with arity {found}, expected {expected}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },

    #[error("unknown variable id {0}")]
    UnknownVariable(u32),

    #[error("query syntax error at line {line}, column {column}: {msg}")]
    QuerySyntax {
        line: usize,
        column: usize,
        msg: String,
    },

    #[error("empty query text")]
    EmptyQuery,

    #[error("decomposition does not fit instance: {0}")]
    DecompositionMismatch(String),

    #[error("inconsistent encoding: {0}")]
    InconsistentEncoding(String),

    #[error("slot capacity mismatch: automaton has {automaton}, encoding has {encoding}")]
    CapacityMismatch { automaton: usize, encoding: usize },

    #[error("query atom arity {arity} exceeds slot capacity {capacity}")]
    AtomTooWide { arity: usize, capacity: usize },

    #[error("encoding contains uncertain facts")]
    UncertainEncoding,

    #[error("determinization state budget of {0} exceeded")]
    BudgetExceeded(usize),

    #[error("element {0} does not occur in the instance")]
    UnknownElement(String),

    #[error("relation {0} is not binary")]
    NotBinary(String),

    #[error("circuit is not flagged as d-DNNF")]
    NotDdnnf,

    #[error("NOT gate {0} has a non-variable input")]
    NotOnNonVariable(usize),

    #[error("invalid companion decomposition: {0}")]
    InvalidCompanion(String),

    #[error("variable cap exceeded: {vars} variables, cap is {cap}")]
    VariableCapExceeded { vars: usize, cap: usize },

    #[error("tentacle boundary of size {size} exceeds maximum {max}")]
    BoundaryTooLarge { size: usize, max: usize },

    #[error("query endpoint {0} is not a core element")]
    EndpointNotInCore(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Tags the error with the pipeline stage that raised it.
    pub fn at(self, stage: &'static str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage { stage, source: Box::new(e) },
        }
    }

    /// The error without its stage tag.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
