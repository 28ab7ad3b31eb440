use thiserror::Error;

use crate::node::NodeRef;
use crate::value::Value;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every fault the engine can report. Validation findings are not errors;
/// they are returned as [`crate::context::ValidationReport`] data.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("unknown edge `{0}`")]
    UnknownEdge(String),

    #[error("edge label `{label}` is ambiguous, qualify it as one of: {candidates:?}")]
    AmbiguousEdge { label: String, candidates: Vec<String> },

    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("type error: expected {expected}, found {found}")]
    Type { expected: String, found: String },

    #[error("expressions do not share a key: {first} vs {second}")]
    KeyMismatch { first: NodeRef, second: NodeRef },

    #[error("aggregate `{op}` is not applicable on {target}")]
    OpNotApplicable { op: String, target: String },

    #[error("unknown aggregate operation `{0}`")]
    UnknownAggregate(String),

    #[error("cannot compare {left} with {right}")]
    PredicateType { left: String, right: String },

    #[error("value `{value}` does not belong to domain {domain}")]
    Domain { value: String, domain: String },

    #[error("product extent of {node} has {size} elements, above the limit of {limit}")]
    ProductTooLarge { node: NodeRef, size: u128, limit: u128 },

    #[error("missing function for edge {0}")]
    MissingFunction(String),

    #[error("parallel expressions {left} and {right} disagree on {} key(s): {}", .witnesses.len(), cells(.witnesses))]
    EqualityViolation {
        left: String,
        right: String,
        witnesses: Vec<Value>,
    },

    #[error("not a tree query: {left} and {right} are parallel")]
    NotTreeQuery { left: String, right: String },

    #[error("aggregate `{0}` is not associative, nested evaluation refused")]
    NotAssociative(String),

    #[error("partition of {left} does not refine partition of {right}")]
    NotRefined { left: String, right: String },

    #[error("division by zero at key {0}")]
    DivisionByZero(Value),

    #[error("answer domains do not match: {0}")]
    DomainMismatch(String),

    #[error("root collision: {0}")]
    RootCollision(String),

    #[error("attribute `{attribute}` declared with conflicting domains")]
    DomainConflict { attribute: String },

    #[error("rule `{rule}` does not match at {path}")]
    NoMatch { rule: String, path: String },

    #[error("duplicate key {key} with conflicting rows {first:?} and {second:?}")]
    KeyViolation {
        key: Value,
        first: Vec<Value>,
        second: Vec<Value>,
    },

    #[error("edge `{0}` has no backing table")]
    UnbackedEdge(String),

    #[error("cannot translate to SQL: {0}")]
    UnsupportedSql(String),

    #[error("view error: {0}")]
    View(String),

    #[error("no node reaches all of {0:?}")]
    NoCandidateKey(Vec<String>),

    #[error("integer overflow while aggregating")]
    Overflow,

    #[error("io error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    /// Stable machine-readable code, used in HTTP payloads and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::UnknownEdge(_) => "unknown-edge",
            Error::AmbiguousEdge { .. } => "ambiguous-edge",
            Error::UnknownNode(_) => "unknown-node",
            Error::Type { .. } => "type",
            Error::KeyMismatch { .. } => "key-mismatch",
            Error::OpNotApplicable { .. } => "op-not-applicable",
            Error::UnknownAggregate(_) => "unknown-aggregate",
            Error::PredicateType { .. } => "predicate-type",
            Error::Domain { .. } => "domain",
            Error::ProductTooLarge { .. } => "product-too-large",
            Error::MissingFunction(_) => "missing-function",
            Error::EqualityViolation { .. } => "equality-violation",
            Error::NotTreeQuery { .. } => "not-tree-query",
            Error::NotAssociative(_) => "not-associative",
            Error::NotRefined { .. } => "not-refined",
            Error::DivisionByZero(_) => "division-by-zero",
            Error::DomainMismatch(_) => "domain-mismatch",
            Error::RootCollision(_) => "root-collision",
            Error::DomainConflict { .. } => "domain-conflict",
            Error::NoMatch { .. } => "no-match",
            Error::KeyViolation { .. } => "key-violation",
            Error::UnbackedEdge(_) => "unbacked-edge",
            Error::UnsupportedSql(_) => "unsupported-sql",
            Error::View(_) => "view",
            Error::NoCandidateKey(_) => "no-candidate-key",
            Error::Overflow => "overflow",
            Error::Io(_) => "io",
            Error::Format(_) => "format",
        }
    }

    pub(crate) fn syntax(position: usize, message: impl Into<String>) -> Self {
        Error::Syntax {
            position,
            message: message.into(),
        }
    }

    pub(crate) fn type_mismatch(expected: impl ToString, found: impl ToString) -> Self {
        Error::Type {
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

fn cells(values: &[Value]) -> String {
    values.iter().map(Value::to_cell).collect::<Vec<_>>().join(", ")
}
