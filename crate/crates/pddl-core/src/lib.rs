//! Typed STRIPS + streams dialect: parsing, state/action semantics and plan
//! validation.
//!
//! This crate is the symbolic core of the planning-and-acting engine. It
//! knows nothing about geometry or execution; it provides the oracle every
//! other crate checks itself against:
//!
//! - [`parser::parse_domain`] / [`parser::parse_problem`] /
//!   [`parser::parse_streams`] read the s-expression dialect (grammar in
//!   `docs/dialect.md` at the workspace root),
//! - [`semantics::applicable`] / [`semantics::apply`] implement transition
//!   semantics over fluent states with a separate static fact set,
//! - [`semantics::validate_plan`] replays a plan and reports the first
//!   failure.

pub mod error;
pub mod parser;
pub mod printer;
pub mod semantics;
pub mod sexp;
pub mod types;

pub use error::{PddlError, Result};
pub use parser::{parse_domain, parse_problem, parse_streams};
pub use printer::{print_domain, print_problem, print_streams};
pub use semantics::{apply, apply_checked, applicable, unsatisfied_goals, validate_plan};
pub use types::{
    ActionSchema, Domain, Fact, GroundAction, Literal, Plan, PlanProvenance, PredKind, Predicate,
    Problem, SemType, StreamSpec, SymbolicState, Term, ValidationReport,
};
