//! Exact decision of polynomial input-output properties of ReLU networks.
//!
//! The pipeline decides whether a piece-wise-linear feed-forward network can
//! violate a quantifier-free polynomial real-arithmetic property over
//! bounded variable ranges:
//!
//! 1. [`linearize`] complements every nonlinear atom with guarded
//!    piecewise-linear over- and under-approximations.
//! 2. [`mosaic`] decomposes the resulting formula into *azulejos* —
//!    pairwise-disjoint linear input regions, each carrying a normalized
//!    linear query plus a disjunctive normal form of the remaining exact
//!    constraints.
//! 3. [`reach`] runs exact star-set reachability per azulejo and enumerates
//!    counterexample regions `(ι, ω)` on which the network is a single
//!    affine map.
//! 4. [`filter`] decides each region exactly (rational LP) or by interval
//!    constraint propagation, rejecting counterexamples that are artifacts
//!    of the approximation.
//!
//! The result is either `safe`, an exhaustive set of concrete counterexample
//! regions, or `unknown` when an interval budget runs out — never a safety
//! claim backed by an undecided region.

pub mod driver;
pub mod error;
pub mod filter;
pub mod formula;
pub mod linearize;
pub mod mosaic;
pub mod network;
pub mod rat;
pub mod reach;
pub mod replay;
pub mod satcore;
pub mod stats;
pub mod theory;

pub use rat::Rat;
