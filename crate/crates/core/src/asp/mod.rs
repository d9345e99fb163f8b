//! Answer-set programs: representation, text format, compilers and transforms.

pub mod direct;
pub mod lav;
pub mod parse;
pub mod transform;
pub mod program;

pub use direct::{compile_direct, compile_transitive, predicate_of, primed, reachable_peers};
pub use lav::{compile_lav, lav_labels, SourceLabel};
pub use parse::parse_program;
pub use transform::{head_cycle, is_hcf, shift_disjunctions, unfold_choice};
pub use program::{BodyElem, ChoiceGoal, Layer, Literal, Minimality, OutputMap, Program, Rule};
