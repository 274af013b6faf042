//! Formula layer: polynomial terms, atoms, formula trees, ranges and the
//! query file parser.
//!
//! All coefficients are exact rationals. Every type here is an immutable
//! value after construction and safe to share across workers.

pub mod ast;
pub mod atom;
pub mod parse;
pub mod term;

use std::collections::BTreeMap;
use std::fmt;

use crate::rat::{self, Rat};

pub use ast::{skeleton, AtomDict, Formula, SkelLit, Skeleton};
pub use atom::{Atom, AtomKind, Relation};
pub use parse::parse;
pub use term::{PowerProduct, Term};

/// Per-variable closed rational interval bounds.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Ranges(pub BTreeMap<String, (Rat, Rat)>);

impl Ranges {
    pub fn get(&self, var: &str) -> Option<&(Rat, Rat)> {
        self.0.get(var)
    }

    pub fn insert(&mut self, var: &str, lo: Rat, hi: Rat) {
        assert!(lo <= hi, "empty range for {}", var);
        self.0.insert(var.to_string(), (lo, hi));
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.0.keys()
    }
}

/// Whether the engine searches for counterexamples of the formula as written
/// (`Falsify`) or of its negation (`Prove`; a "safe" verdict then certifies
/// validity of the formula on the declared ranges).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Falsify,
    Prove,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Falsify => write!(f, "falsify"),
            Mode::Prove => write!(f, "prove"),
        }
    }
}

/// A parsed verification query: formula, variable ordering and ranges.
#[derive(Clone, Debug, PartialEq)]
pub struct QuerySpec {
    pub formula: Formula,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub ranges: Ranges,
    pub mode: Mode,
}

impl QuerySpec {
    /// Checks the structural invariants: disjoint input/output lists, a
    /// range for every variable, and no free variables outside the
    /// declarations.
    pub fn validate(&self) -> Result<(), String> {
        for i in &self.inputs {
            if self.outputs.contains(i) {
                return Err(format!("variable '{}' declared as both input and output", i));
            }
        }
        for v in self.inputs.iter().chain(&self.outputs) {
            if self.ranges.get(v).is_none() {
                return Err(format!("missing range for '{}'", v));
            }
        }
        for v in self.formula.vars(&self.outputs) {
            if !self.inputs.contains(&v) && !self.outputs.contains(&v) {
                return Err(format!("undeclared variable '{}'", v));
            }
        }
        Ok(())
    }

    /// The formula the engine actually searches counterexamples for:
    /// in `prove` mode the negation, in `falsify` mode the formula itself.
    pub fn goal_formula(&self) -> Formula {
        match self.mode {
            Mode::Falsify => self.formula.clone(),
            Mode::Prove => Formula::not(self.formula.clone()),
        }
    }

    /// Render the spec back into query file syntax. `parse(print(q))` is
    /// structurally equal to `q`.
    pub fn print(&self) -> String {
        let decl = |names: &[String]| {
            names
                .iter()
                .map(|n| {
                    let (lo, hi) = self.ranges.get(n).expect("validated");
                    format!("{} [{}, {}]", n, rat::display(lo), rat::display(hi))
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        format!(
            "inputs: {}; outputs: {}; {}: {}",
            decl(&self.inputs),
            decl(&self.outputs),
            self.mode,
            self.formula
        )
    }
}
