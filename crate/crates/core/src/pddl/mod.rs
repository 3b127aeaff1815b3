//! Representation, parsing and printing of STRIPS + typing PDDL.

mod error;
mod model;
mod parse;
mod print;
pub mod sexpr;
mod types;

pub use error::{ModelError, ParseError, SyntaxErrorKind};
pub use model::{is_variable, ActionSchema, Atom, Domain, PredicateSchema, Problem, TypedName};
pub use parse::{parse_action, parse_domain, parse_problem};
pub use print::{print_action, print_domain, print_problem};
pub use sexpr::Position;
pub use types::{TypeHierarchy, ROOT_TYPE};

/// Free-function form of [`TypeHierarchy::is_subtype`].
pub fn is_subtype(types: &TypeHierarchy, child: &str, ancestor: &str) -> Result<bool, ModelError> {
    types.is_subtype(child, ancestor)
}
