use thiserror::Error;

use crate::relational::PeerId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("arity mismatch for `{relation}`: expected {expected}, found {found}")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate peer `{0}`")]
    DuplicatePeer(String),
    #[error("relation `{0}` is declared more than once (peer schemas must be disjoint)")]
    DuplicateRelation(String),
    #[error("unknown peer `{0}`")]
    UnknownPeer(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("existential variable `{0}` occurs in the constraint body")]
    ExistentialInBody(String),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("invalid exchange constraint: {0}")]
    InvalidDec(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("invalid trust relation on {}: each pair of distinct peers takes exactly one level", fmt_pairs(.0))]
    TrustViolation(Vec<(PeerId, PeerId)>),
    #[error("unsupported constraint: {0}")]
    Unsupported(String),
    #[error("repair search needs more than {cap} inserted atoms")]
    SearchCapExceeded { cap: usize },
    #[error("query is not safe-range: {0}")]
    NotSafeRange(String),
    #[error("query mentions relation `{relation}`, which peer `{peer}` does not own")]
    ForeignRelation { relation: String, peer: String },
    #[error("program is not head-cycle free: {0}")]
    NotHcf(String),
    #[error("not a full inclusion dependency: {0}")]
    NotFullInclusion(String),
    #[error("rule is not range-restricted: {0}")]
    UnsafeRule(String),
}

fn fmt_pairs(pairs: &[(PeerId, PeerId)]) -> String {
    pairs
        .iter()
        .map(|(a, b)| format!("({a}, {b})"))
        .collect::<Vec<_>>()
        .join(", ")
}
