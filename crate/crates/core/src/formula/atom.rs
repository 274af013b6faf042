//! Atomic constraints in canonical `term ⋈ 0` form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;


use crate::rat::{self, Rat};

use super::term::Term;

/// Comparison relations against zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Relation {
    pub fn holds(&self, value: &Rat) -> bool {
        let z = rat::zero();
        match self {
            Relation::Lt => value < &z,
            Relation::Le => value <= &z,
            Relation::Eq => value == &z,
            Relation::Ne => value != &z,
            Relation::Ge => value >= &z,
            Relation::Gt => value > &z,
        }
    }

    /// Relation of the complementary atom (`¬(t < 0)` is `t ≥ 0`).
    pub fn negated(&self) -> Relation {
        match self {
            Relation::Lt => Relation::Ge,
            Relation::Le => Relation::Gt,
            Relation::Eq => Relation::Ne,
            Relation::Ne => Relation::Eq,
            Relation::Ge => Relation::Lt,
            Relation::Gt => Relation::Le,
        }
    }

    /// Relation after negating the term (`t < 0` is `-t > 0`).
    pub fn flipped(&self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ne => Relation::Ne,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ne => "!=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }
}

/// An atomic formula: a polynomial constraint against zero, or the
/// distinguished "output i attains the maximum" predicate used for
/// symmetry elimination on argmax-style queries.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    Poly { term: Term, rel: Relation },
    ArgmaxIs(usize),
}

impl Atom {
    /// Build `lhs ⋈ rhs` and normalize to canonical `term ⋈ 0` form.
    ///
    /// Canonicalization maps `>` / `>=` onto `<` / `<=` by negating the term,
    /// and fixes the leading sign of `=` / `!=` atoms, so that syntactically
    /// different spellings of the same constraint share one atom.
    pub fn cmp(lhs: Term, rel: Relation, rhs: Term) -> Atom {
        let term = lhs.sub(&rhs);
        Atom::normalized(term, rel)
    }

    fn normalized(term: Term, rel: Relation) -> Atom {
        let (term, rel) = match rel {
            Relation::Ge | Relation::Gt => (term.neg(), rel.flipped()),
            Relation::Eq | Relation::Ne => {
                match term.leading_coeff() {
                    Some(c) if c < &rat::zero() => (term.neg(), rel),
                    _ => (term, rel),
                }
            }
            _ => (term, rel),
        };
        Atom::Poly { term, rel }
    }

    /// Evaluate the atom at a total state. Tied maxima satisfy `ArgmaxIs`.
    pub fn eval(
        &self,
        state: &BTreeMap<String, Rat>,
        outputs: &[String],
    ) -> Result<bool, String> {
        match self {
            Atom::Poly { term, rel } => Ok(rel.holds(&term.eval(state)?)),
            Atom::ArgmaxIs(i) => {
                let target = outputs
                    .get(*i)
                    .ok_or_else(|| format!("argmax_out index {} out of range", i))?;
                let ti = state.get(target).ok_or_else(|| target.clone())?;
                for (j, name) in outputs.iter().enumerate() {
                    if j == *i {
                        continue;
                    }
                    let tj = state.get(name).ok_or_else(|| name.clone())?;
                    if ti < tj {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }

    /// Expand `ArgmaxIs(i)` to its conjunction of pairwise comparisons
    /// `x_i - x_j >= 0` for all `j != i`. A plain polynomial atom expands
    /// to itself.
    pub fn expand_argmax(&self, outputs: &[String]) -> Vec<Atom> {
        match self {
            Atom::Poly { .. } => vec![self.clone()],
            Atom::ArgmaxIs(i) => {
                let xi = Term::var(&outputs[*i]);
                outputs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| j != i)
                    .map(|(_, xj)| Atom::cmp(xi.clone(), Relation::Ge, Term::var(xj)))
                    .collect()
            }
        }
    }

    pub fn vars(&self, outputs: &[String]) -> BTreeSet<String> {
        match self {
            Atom::Poly { term, .. } => term.vars(),
            Atom::ArgmaxIs(_) => outputs.iter().cloned().collect(),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            Atom::Poly { term, .. } => term.is_linear(),
            // Expands to pairwise linear comparisons.
            Atom::ArgmaxIs(_) => true,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Poly { term, rel } => write!(f, "{} {} 0", term, rel.symbol()),
            Atom::ArgmaxIs(i) => write!(f, "argmax_out = {}", i),
        }
    }
}

/// Derived classification of an atom relative to the input variable set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AtomKind {
    /// Total degree at most 1 (after argmax expansion).
    pub linear: bool,
    /// All variables drawn from the query inputs.
    pub input_only: bool,
}

impl Atom {
    /// Classify the atom: linear iff total degree <= 1, input-only iff its
    /// variables are a subset of `inputs`. `ArgmaxIs` speaks about outputs.
    pub fn kind(&self, inputs: &BTreeSet<String>, outputs: &[String]) -> AtomKind {
        match self {
            Atom::Poly { term, .. } => AtomKind {
                linear: term.is_linear(),
                input_only: term.vars().iter().all(|v| inputs.contains(v)),
            },
            Atom::ArgmaxIs(_) => AtomKind {
                linear: true,
                input_only: outputs.is_empty(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn outputs() -> Vec<String> {
        vec!["y0".into(), "y1".into(), "y2".into()]
    }

    #[test]
    fn canonicalization_merges_spellings() {
        // x > 0, 0 < x and -x < 0 are the same atom.
        let a = Atom::cmp(Term::var("x"), Relation::Gt, Term::zero());
        let b = Atom::cmp(Term::zero(), Relation::Lt, Term::var("x"));
        let c = Atom::cmp(Term::var("x").neg(), Relation::Lt, Term::zero());
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn equality_sign_normalized() {
        let a = Atom::cmp(Term::var("x"), Relation::Eq, Term::constant(int(1)));
        let b = Atom::cmp(Term::constant(int(1)), Relation::Eq, Term::var("x"));
        assert_eq!(a, b);
    }

    #[test]
    fn classification_matches_contract() {
        let inputs: BTreeSet<String> = ["r", "rv"].iter().map(|s| s.to_string()).collect();
        // 200*r - rv^2 >= 0 : nonlinear, input-only
        let inv = Atom::cmp(
            Term::var("r").scale(&int(200)).sub(&Term::var("rv").pow(2)),
            Relation::Ge,
            Term::zero(),
        );
        let k = inv.kind(&inputs, &outputs());
        assert!(!k.linear && k.input_only);
        // a = 0 : linear, mixed-or-output
        let act = Atom::cmp(Term::var("a"), Relation::Eq, Term::zero());
        let k = act.kind(&inputs, &outputs());
        assert!(k.linear && !k.input_only);
        // r > 0 : linear, input-only
        let pos = Atom::cmp(Term::var("r"), Relation::Gt, Term::zero());
        let k = pos.kind(&inputs, &outputs());
        assert!(k.linear && k.input_only);
    }

    #[test]
    fn argmax_semantics_and_expansion() {
        let outs = outputs();
        let a = Atom::ArgmaxIs(1);
        let mut st: BTreeMap<String, Rat> = BTreeMap::new();
        st.insert("y0".into(), int(1));
        st.insert("y1".into(), int(3));
        st.insert("y2".into(), frac(5, 2));
        assert!(a.eval(&st, &outs).unwrap());
        st.insert("y2".into(), int(4));
        assert!(!a.eval(&st, &outs).unwrap());
        // Ties count as maximal.
        st.insert("y2".into(), int(3));
        assert!(a.eval(&st, &outs).unwrap());
        let expanded = a.expand_argmax(&outs);
        assert_eq!(expanded.len(), 2);
        for e in &expanded {
            assert!(e.is_linear());
        }
    }
}
