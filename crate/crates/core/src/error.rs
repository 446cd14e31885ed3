use thiserror::Error;

use crate::treewidth::DecompositionError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown element `{0}`")]
    UnknownElement(String),

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("relation `{name}` has arity {expected}, got a tuple of length {found}")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },

    #[error("relation `{name}` has arity {arity}, above the cap of {cap}")]
    ArityCap {
        name: String,
        arity: usize,
        cap: usize,
    },

    #[error("relation `{0}` declared twice with different arities")]
    DuplicateRelation(String),

    #[error("name `{0}` uses the reserved `__` prefix")]
    ReservedName(String),

    #[error("generated relation name `{0}` collides with an existing symbol")]
    NameCollision(String),

    #[error("vocabulary mismatch: {0}")]
    VocabularyMismatch(String),

    #[error("free variable `{0}` is listed twice")]
    DuplicateFreeVariable(String),

    #[error("malformed database: {0}")]
    MalformedDatabase(String),

    #[error("the augmented structure of the query is not a core")]
    NotACore,

    #[error("hypergraph mismatch: {0}")]
    HypergraphMismatch(String),

    #[error("interpolation produced a non-integral coefficient: {0}")]
    NonIntegral(String),

    #[error("invalid interpolation system: {0}")]
    InvalidSystem(String),

    #[error("{numerator} is not divisible by the automorphism count {divisor}")]
    NonDivisible { numerator: String, divisor: usize },

    #[error("invalid tree decomposition: {0}")]
    Decomposition(#[from] DecompositionError),

    #[error("search budget of {0} nodes exceeded")]
    BudgetExceeded(u64),

    #[error("enumeration of {needed} candidate maps exceeds the cap of {cap}")]
    EnumerationCap { needed: String, cap: u64 },

    #[error("decomposition width {width} exceeds the width cap {cap}")]
    WidthCap { width: usize, cap: usize },

    #[error("{count} vertices in one component exceed the cap of {cap}")]
    ComponentCap { count: usize, cap: usize },

    #[error("graph with {0} vertices is too large for exact treewidth")]
    GraphTooLarge(usize),

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Budget, cap and size-limit failures. Everything else is an input or
    /// internal error.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded(_)
                | Error::EnumerationCap { .. }
                | Error::WidthCap { .. }
                | Error::ComponentCap { .. }
                | Error::GraphTooLarge(_)
        )
    }
}
