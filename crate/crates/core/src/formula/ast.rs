//! Quantifier-free formula trees and their structural utilities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::rat::Rat;

use super::atom::Atom;

/// A quantifier-free formula over [`Atom`] leaves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    Atom(Atom),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn atom(a: Atom) -> Formula {
        Formula::Atom(a)
    }

    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::True,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::And(fs),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        match fs.len() {
            0 => Formula::False,
            1 => fs.into_iter().next().unwrap(),
            _ => Formula::Or(fs),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// The set of distinct atoms, in canonical order.
    pub fn atoms(&self) -> BTreeSet<Atom> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::Not(f) => f.collect_atoms(out),
            Formula::And(fs) | Formula::Or(fs) => {
                for f in fs {
                    f.collect_atoms(out);
                }
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    /// Free variables of the formula.
    pub fn vars(&self, outputs: &[String]) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for a in self.atoms() {
            out.extend(a.vars(outputs));
        }
        out
    }

    /// Exact evaluation at a total state.
    pub fn eval(
        &self,
        state: &BTreeMap<String, Rat>,
        outputs: &[String],
    ) -> Result<bool, String> {
        Ok(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.eval(state, outputs)?,
            Formula::Not(f) => !f.eval(state, outputs)?,
            Formula::And(fs) => {
                let mut v = true;
                for f in fs {
                    v &= f.eval(state, outputs)?;
                }
                v
            }
            Formula::Or(fs) => {
                let mut v = false;
                for f in fs {
                    v |= f.eval(state, outputs)?;
                }
                v
            }
            Formula::Implies(a, b) => !a.eval(state, outputs)? || b.eval(state, outputs)?,
            Formula::Iff(a, b) => a.eval(state, outputs)? == b.eval(state, outputs)?,
        })
    }

    /// Negation normal form: `Implies`/`Iff` expanded, negations pushed to
    /// the atoms. The satisfying states are preserved exactly.
    pub fn nnf(&self) -> Formula {
        self.nnf_signed(false)
    }

    fn nnf_signed(&self, negate: bool) -> Formula {
        match self {
            Formula::True => {
                if negate {
                    Formula::False
                } else {
                    Formula::True
                }
            }
            Formula::False => {
                if negate {
                    Formula::True
                } else {
                    Formula::False
                }
            }
            Formula::Atom(a) => {
                if negate {
                    Formula::not(Formula::Atom(a.clone()))
                } else {
                    Formula::Atom(a.clone())
                }
            }
            Formula::Not(f) => f.nnf_signed(!negate),
            Formula::And(fs) => {
                let children: Vec<_> = fs.iter().map(|f| f.nnf_signed(negate)).collect();
                if negate {
                    Formula::or(children)
                } else {
                    Formula::and(children)
                }
            }
            Formula::Or(fs) => {
                let children: Vec<_> = fs.iter().map(|f| f.nnf_signed(negate)).collect();
                if negate {
                    Formula::and(children)
                } else {
                    Formula::or(children)
                }
            }
            Formula::Implies(a, b) => {
                if negate {
                    // ¬(a -> b) = a ∧ ¬b
                    Formula::and(vec![a.nnf_signed(false), b.nnf_signed(true)])
                } else {
                    Formula::or(vec![a.nnf_signed(true), b.nnf_signed(false)])
                }
            }
            Formula::Iff(a, b) => {
                // a <-> b = (a ∧ b) ∨ (¬a ∧ ¬b); negation swaps one side.
                let pos = Formula::and(vec![a.nnf_signed(false), b.nnf_signed(negate)]);
                let neg = Formula::and(vec![a.nnf_signed(true), b.nnf_signed(!negate)]);
                Formula::or(vec![pos, neg])
            }
        }
    }

    /// `true` when the formula is in negation normal form.
    pub fn is_nnf(&self) -> bool {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => true,
            Formula::Not(f) => matches!(**f, Formula::Atom(_)),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().all(|f| f.is_nnf()),
            Formula::Implies(..) | Formula::Iff(..) => false,
        }
    }
}

/// A literal of the propositional skeleton: a positive 1-based variable
/// index and a polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SkelLit {
    pub var: usize,
    pub positive: bool,
}

impl SkelLit {
    pub fn pos(var: usize) -> Self {
        SkelLit { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        SkelLit { var, positive: false }
    }

    pub fn negated(self) -> Self {
        SkelLit { var: self.var, positive: !self.positive }
    }
}

/// Propositional skeleton of an NNF formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Skeleton {
    True,
    False,
    Lit(SkelLit),
    And(Vec<Skeleton>),
    Or(Vec<Skeleton>),
}

impl Skeleton {
    pub fn eval(&self, assignment: &dyn Fn(usize) -> bool) -> bool {
        match self {
            Skeleton::True => true,
            Skeleton::False => false,
            Skeleton::Lit(l) => assignment(l.var) == l.positive,
            Skeleton::And(cs) => cs.iter().all(|c| c.eval(assignment)),
            Skeleton::Or(cs) => cs.iter().any(|c| c.eval(assignment)),
        }
    }

    /// Convert to CNF clauses by distribution with tautology and duplicate
    /// elimination. Skeletons in this pipeline are small enough that
    /// distribution stays cheap (no auxiliary variables are introduced, so
    /// model enumeration stays a bijection on atom assignments).
    pub fn to_cnf(&self) -> Vec<Vec<SkelLit>> {
        match self {
            Skeleton::True => vec![],
            Skeleton::False => vec![vec![]],
            Skeleton::Lit(l) => vec![vec![*l]],
            Skeleton::And(cs) => {
                let mut out = Vec::new();
                for c in cs {
                    out.extend(c.to_cnf());
                }
                dedup_clauses(out)
            }
            Skeleton::Or(cs) => {
                let mut acc: Vec<Vec<SkelLit>> = vec![vec![]];
                for c in cs {
                    let rhs = c.to_cnf();
                    if rhs.is_empty() {
                        // One disjunct is trivially true.
                        return vec![];
                    }
                    let mut next = Vec::with_capacity(acc.len() * rhs.len());
                    for left in &acc {
                        for right in &rhs {
                            let mut clause = left.clone();
                            clause.extend(right.iter().copied());
                            next.push(clause);
                        }
                    }
                    acc = next;
                }
                dedup_clauses(acc)
            }
        }
    }
}

fn dedup_clauses(clauses: Vec<Vec<SkelLit>>) -> Vec<Vec<SkelLit>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    'next: for mut clause in clauses {
        clause.sort();
        clause.dedup();
        for pair in clause.windows(2) {
            if pair[0].var == pair[1].var {
                // l ∨ ¬l: tautology
                continue 'next;
            }
        }
        if seen.insert(clause.clone()) {
            out.push(clause);
        }
    }
    out
}

/// Bijective dictionary between atoms and skeleton variables.
#[derive(Clone, Debug, Default)]
pub struct AtomDict {
    atoms: Vec<Atom>,
    index: BTreeMap<Atom, usize>,
}

impl AtomDict {
    pub fn var_of(&self, a: &Atom) -> Option<usize> {
        self.index.get(a).copied()
    }

    pub fn atom_of(&self, var: usize) -> &Atom {
        &self.atoms[var - 1]
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    fn intern(&mut self, a: &Atom) -> usize {
        if let Some(v) = self.index.get(a) {
            return *v;
        }
        self.atoms.push(a.clone());
        let v = self.atoms.len();
        self.index.insert(a.clone(), v);
        v
    }
}

/// Abstract an NNF formula into its propositional skeleton plus the
/// atom/variable dictionary. Duplicate atoms share one variable.
///
/// Panics if the input is not in NNF; run [`Formula::nnf`] first.
pub fn skeleton(f: &Formula) -> (Skeleton, AtomDict) {
    assert!(f.is_nnf(), "skeleton requires negation normal form");
    let mut dict = AtomDict::default();
    // Intern in canonical atom order so variable numbering is deterministic
    // regardless of formula shape.
    for a in f.atoms() {
        dict.intern(&a);
    }
    let skel = build_skeleton(f, &mut dict);
    (skel, dict)
}

fn build_skeleton(f: &Formula, dict: &mut AtomDict) -> Skeleton {
    match f {
        Formula::True => Skeleton::True,
        Formula::False => Skeleton::False,
        Formula::Atom(a) => Skeleton::Lit(SkelLit::pos(dict.intern(a))),
        Formula::Not(inner) => match &**inner {
            Formula::Atom(a) => Skeleton::Lit(SkelLit::neg(dict.intern(a))),
            _ => unreachable!("checked NNF"),
        },
        Formula::And(fs) => Skeleton::And(fs.iter().map(|f| build_skeleton(f, dict)).collect()),
        Formula::Or(fs) => Skeleton::Or(fs.iter().map(|f| build_skeleton(f, dict)).collect()),
        Formula::Implies(..) | Formula::Iff(..) => unreachable!("checked NNF"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self, f, 0)
    }
}

// Precedence levels: <-> 1, -> 2, | 3, & 4, ! 5.
fn write_formula(fm: &Formula, f: &mut fmt::Formatter<'_>, parent: u8) -> fmt::Result {
    let prec = match fm {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(_) => 3,
        Formula::And(_) => 4,
        _ => 6,
    };
    let needs_paren = prec < parent;
    if needs_paren {
        write!(f, "(")?;
    }
    match fm {
        Formula::True => write!(f, "0 <= 0")?,
        Formula::False => write!(f, "0 < 0")?,
        Formula::Atom(a) => write!(f, "{}", a)?,
        Formula::Not(inner) => {
            write!(f, "!")?;
            write_formula(inner, f, 5)?;
        }
        Formula::And(fs) => {
            for (i, c) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " & ")?;
                }
                write_formula(c, f, 4)?;
            }
        }
        Formula::Or(fs) => {
            for (i, c) in fs.iter().enumerate() {
                if i > 0 {
                    write!(f, " | ")?;
                }
                write_formula(c, f, 3)?;
            }
        }
        Formula::Implies(a, b) => {
            // Right-associative: parenthesize a left operand of equal level.
            write_formula(a, f, 3)?;
            write!(f, " -> ")?;
            write_formula(b, f, 2)?;
        }
        Formula::Iff(a, b) => {
            write_formula(a, f, 2)?;
            write!(f, " <-> ")?;
            write_formula(b, f, 1)?;
        }
    }
    if needs_paren {
        write!(f, ")")?;
    }
    Ok(())
}
