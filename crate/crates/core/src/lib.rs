//! Exactly-one-in-three satisfiability (X3SAT).
//!
//! Every clause `(a ⊙ b ⊙ c)` demands that exactly one of its literals is
//! true. The crate provides:
//!
//! - [`scope`]: asserting a literal and propagating to fixpoint, yielding
//!   the forced minterm and residual formula, or a replayable conflict;
//! - [`solver`]: the literal-scanning decision loop that fixes necessary
//!   literals, builds models, and a reference DPLL solver;
//! - [`oracle`]: brute-force model enumeration under exactly-one and
//!   inclusive-or readings;
//! - [`gen`], [`fuzz`]: seeded instances and differential campaigns;
//! - [`textio`], [`trace`]: the `x3` file format and solver trace records.

pub mod formula;
pub mod fuzz;
pub mod gen;
pub mod oracle;
pub mod scope;
pub mod solver;
pub mod textio;
pub mod trace;

pub use formula::{
    evaluate, normalize_clause, Assignment, Formula, FormulaError, Instance, Lit, Minterm,
    Normalized, Var, XClause,
};
pub use scope::{propagate, scope, ConflictInfo, ConflictSite, ScopeResult};
pub use solver::{
    construct_assignment, decide, decide_instance, decide_with, dpll_solve, find_incompatible,
    fix_necessary, SolveConfig, SolveOutcome, UnsatCause, Verdict,
};
pub use textio::{parse_x3, serialize_x3};
pub use trace::{emit_trace, TraceEvent};
