//! Linear constraint systems, interval boxes and theory verdicts.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::formula::Term;
use crate::rat::{self, Rat};

/// Relation of a linear row against its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinRel {
    Le,
    Lt,
    Eq,
}

impl LinRel {
    pub fn holds(&self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            LinRel::Le => lhs <= rhs,
            LinRel::Lt => lhs < rhs,
            LinRel::Eq => lhs == rhs,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            LinRel::Le => "<=",
            LinRel::Lt => "<",
            LinRel::Eq => "=",
        }
    }
}

/// One linear constraint `coeffs · x ⋈ rhs`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinRow {
    pub coeffs: Vec<Rat>,
    pub rel: LinRel,
    pub rhs: Rat,
}

impl LinRow {
    pub fn holds(&self, point: &[Rat]) -> bool {
        let lhs = dot(&self.coeffs, point);
        self.rel.holds(&lhs, &self.rhs)
    }
}

pub fn dot(coeffs: &[Rat], point: &[Rat]) -> Rat {
    debug_assert_eq!(coeffs.len(), point.len());
    let mut acc = rat::zero();
    for (c, x) in coeffs.iter().zip(point) {
        if !c.is_zero() {
            acc += c * x;
        }
    }
    acc
}

/// A conjunction of linear constraints over an ordered variable list.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LinSystem {
    pub vars: Vec<String>,
    pub rows: Vec<LinRow>,
}

impl LinSystem {
    pub fn new(vars: Vec<String>) -> Self {
        LinSystem { vars, rows: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn push(&mut self, coeffs: Vec<Rat>, rel: LinRel, rhs: Rat) {
        assert_eq!(coeffs.len(), self.vars.len(), "row length must equal variable count");
        self.rows.push(LinRow { coeffs, rel, rhs });
    }

    /// Add a linear constraint written as a [`Term`] over a subset of the
    /// system's variables: `term ⋈ 0`. Relations `>=`/`>` are supported by
    /// negating the term first at the call site.
    pub fn push_term(&mut self, term: &Term, rel: LinRel) {
        let (coeffs, constant) = term
            .linear_parts()
            .expect("push_term requires a linear term");
        let mut row = vec![rat::zero(); self.vars.len()];
        for (v, c) in coeffs {
            let idx = self
                .vars
                .iter()
                .position(|name| *name == v)
                .unwrap_or_else(|| panic!("variable '{}' missing from system", v));
            row[idx] = c;
        }
        // term + constant ⋈ 0  ⟺  term ⋈ -constant
        self.rows.push(LinRow { coeffs: row, rel, rhs: -constant });
    }

    /// Conjoin another system over the same variable ordering.
    pub fn extend(&mut self, other: &LinSystem) {
        assert_eq!(self.vars, other.vars);
        self.rows.extend(other.rows.iter().cloned());
    }

    /// Exact membership test.
    pub fn contains(&self, point: &[Rat]) -> bool {
        self.rows.iter().all(|r| r.holds(point))
    }

    /// Point as named assignment.
    pub fn assignment(&self, point: &[Rat]) -> BTreeMap<String, Rat> {
        self.vars.iter().cloned().zip(point.iter().cloned()).collect()
    }
}

impl fmt::Display for LinSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let mut first = true;
            for (c, v) in row.coeffs.iter().zip(&self.vars) {
                if c.is_zero() {
                    continue;
                }
                if !first {
                    write!(f, " + ")?;
                }
                write!(f, "{}*{}", rat::display(c), v)?;
                first = false;
            }
            if first {
                write!(f, "0")?;
            }
            writeln!(f, " {} {}", row.rel.symbol(), rat::display(&row.rhs))?;
        }
        Ok(())
    }
}

/// A closed axis-aligned box with rational endpoints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalBox {
    pub vars: Vec<String>,
    pub lo: Vec<Rat>,
    pub hi: Vec<Rat>,
}

impl IntervalBox {
    pub fn new(vars: Vec<String>, lo: Vec<Rat>, hi: Vec<Rat>) -> Self {
        assert_eq!(vars.len(), lo.len());
        assert_eq!(vars.len(), hi.len());
        for (l, h) in lo.iter().zip(&hi) {
            assert!(l <= h, "empty interval box");
        }
        IntervalBox { vars, lo, hi }
    }

    pub fn interval_of(&self, var: &str) -> Option<(&Rat, &Rat)> {
        let idx = self.vars.iter().position(|v| v == var)?;
        Some((&self.lo[idx], &self.hi[idx]))
    }

    pub fn center(&self) -> Vec<Rat> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| rat::midpoint(l, h))
            .collect()
    }

    pub fn width(&self, idx: usize) -> Rat {
        &self.hi[idx] - &self.lo[idx]
    }

    pub fn contains(&self, point: &[Rat]) -> bool {
        point
            .iter()
            .enumerate()
            .all(|(i, x)| &self.lo[i] <= x && x <= &self.hi[i])
    }

    /// The box as a pair of `LinSystem` rows per variable.
    pub fn to_linsystem(&self) -> LinSystem {
        let mut sys = LinSystem::new(self.vars.clone());
        for i in 0..self.vars.len() {
            let mut up = vec![rat::zero(); self.vars.len()];
            up[i] = rat::one();
            sys.push(up, LinRel::Le, self.hi[i].clone());
            let mut down = vec![rat::zero(); self.vars.len()];
            down[i] = -rat::one();
            sys.push(down, LinRel::Le, -self.lo[i].clone());
        }
        sys
    }
}

/// Outcome of a theory satisfiability check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TheoryVerdict {
    /// Satisfiable, with an exact witness verified by substitution.
    Sat(BTreeMap<String, Rat>),
    Unsat,
    /// Budget or box-size floor hit before a decision.
    Unknown(String),
}

impl TheoryVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, TheoryVerdict::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, TheoryVerdict::Unsat)
    }
}
