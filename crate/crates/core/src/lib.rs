pub mod asp;
pub mod cli;
pub mod error;
pub mod lang;
pub mod oracle;
pub mod query;
pub mod relational;
pub mod solver;
pub mod trust;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/systems.md")]
mod book_systems {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/trust.md")]
mod book_trust {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solutions.md")]
mod book_solutions {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/answers.md")]
mod book_answers {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/programs.md")]
mod book_programs {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/annotated.md")]
mod book_annotated {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/choice.md")]
mod book_choice {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/solver.md")]
mod book_solver {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
