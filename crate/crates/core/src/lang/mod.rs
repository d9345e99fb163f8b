//! Surface syntax for systems, constraints and queries.

pub mod ast;
pub mod classify;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod saferange;
pub mod system;

pub use ast::{AtomPattern, Builtin, CmpOp, Conjunct, Constraint, ConstraintOwner, Formula, Query, Term};
pub use classify::{classify_dec, DecClass};
pub use parser::{parse_constraint, parse_formula, parse_query, parse_system};
pub use saferange::safe_range_check;
pub use system::{Peer, System};
