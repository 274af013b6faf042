//! Theory back-ends: exact rational linear programming and interval-based
//! nonlinear satisfiability.
//!
//! Solvers are stateless functions over immutable inputs; any number of
//! checks may run concurrently against a shared [`crate::stats::Counters`]
//! sink.

pub mod icp;
pub mod interval;
pub mod linsys;
pub mod normalize;
pub mod simplex;

pub use icp::{
    icp_check, push_linear_constraint, verify_refutation, IcpBudget, IcpOutcome, LeafReason,
    PolyConstraint, RefutationNode,
};
pub use interval::{interval_eval, Interval};
pub use linsys::{dot, IntervalBox, LinRel, LinRow, LinSystem, TheoryVerdict};
pub use normalize::{literal_dnf, SignedAtom};
pub use simplex::{
    lp_extremum, lp_feasible, lp_feasible_fast, lp_row_bounds, Direction, Extremum, InfeasibleInput,
};
