//! Conversion of signed atoms into primitive theory constraints.
//!
//! Equality atoms split into their `<=` and `>=` halves, disequalities and
//! negated argmax atoms branch into small disjunctions, so a conjunction of
//! literals becomes a DNF of [`PolyConstraint`] conjunctions.

use crate::formula::{Atom, Relation, Term};

use super::icp::PolyConstraint;

/// A signed occurrence of an atom.
pub type SignedAtom = (Atom, bool);

fn poly(term: Term, rel: Relation) -> PolyConstraint {
    PolyConstraint::new(term, rel)
}

/// Constraint alternatives for one literal. The outer vector is a
/// disjunction, the inner a conjunction.
fn literal_branches(atom: &Atom, positive: bool, outputs: &[String]) -> Vec<Vec<PolyConstraint>> {
    match atom {
        Atom::Poly { term, rel } => {
            let rel = if positive { *rel } else { rel.negated() };
            match rel {
                Relation::Eq => vec![vec![
                    poly(term.clone(), Relation::Le),
                    poly(term.clone(), Relation::Ge),
                ]],
                Relation::Ne => vec![
                    vec![poly(term.clone(), Relation::Lt)],
                    vec![poly(term.clone(), Relation::Gt)],
                ],
                rel => vec![vec![poly(term.clone(), rel)]],
            }
        }
        Atom::ArgmaxIs(i) => {
            let pairwise: Vec<Term> = outputs
                .iter()
                .enumerate()
                .filter(|(j, _)| j != i)
                .map(|(_, xj)| Term::var(&outputs[*i]).sub(&Term::var(xj)))
                .collect();
            if positive {
                vec![pairwise
                    .into_iter()
                    .map(|t| poly(t, Relation::Ge))
                    .collect()]
            } else {
                // Some other output strictly exceeds output i.
                pairwise
                    .into_iter()
                    .map(|t| vec![poly(t, Relation::Lt)])
                    .collect()
            }
        }
    }
}

/// Expand a conjunction of signed atoms into a DNF of primitive constraint
/// conjunctions (the cross product of the per-literal branches).
pub fn literal_dnf(literals: &[SignedAtom], outputs: &[String]) -> Vec<Vec<PolyConstraint>> {
    let mut acc: Vec<Vec<PolyConstraint>> = vec![vec![]];
    for (atom, positive) in literals {
        let branches = literal_branches(atom, *positive, outputs);
        let mut next = Vec::with_capacity(acc.len() * branches.len());
        for prefix in &acc {
            for branch in &branches {
                let mut conj = prefix.clone();
                conj.extend(branch.iter().cloned());
                next.push(conj);
            }
        }
        acc = next;
    }
    acc
}
