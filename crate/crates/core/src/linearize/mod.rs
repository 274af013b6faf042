//! Piecewise-linear over- and under-approximation of nonlinear atoms, and
//! query augmentation with guarded approximations.
//!
//! For every nonlinear atom `a` the query gains the conjuncts
//! `(a ⇒ ā) ∧ (ḁ ⇒ a)` where `ā`/`ḁ` are linear-arithmetic formulas;
//! the augmented query is equivalent to the original on the range box, and
//! the added linear atoms give the decomposition stage real input/output
//! structure to split on.

pub mod maxbound;
pub mod pwl;
pub mod univariate;

use std::collections::BTreeSet;

use crate::formula::{Atom, Formula, Ranges, Relation, Term};
use crate::rat::{self, Rat};
use crate::theory::IntervalBox;

pub use maxbound::{max_upper_bound, min_lower_bound, MaxBound, MaxBoundParams, MinBound};
pub use pwl::{term_bounds, ApproxMode, PwBounds, PwPiece};
pub use univariate::{univariate_bounds, Line, UnivariatePiece};

/// Approximation settings.
#[derive(Clone, Debug)]
pub struct ApproxConfig {
    /// Piece count per univariate segment (the paper's main evaluation
    /// setting is 1).
    pub pieces: u32,
    /// Breakpoint overlap for over-approximation guards.
    pub eps: Rat,
    pub mode: ApproxMode,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig { pieces: 1, eps: rat::frac(1, 1_000_000), mode: ApproxMode::Overt }
    }
}

/// Linear over- and under-approximations of one nonlinear atom.
#[derive(Clone, Debug)]
pub struct AtomApprox {
    pub atom: Atom,
    /// `a ∧ R ⇒ over`.
    pub over: Formula,
    /// `under ∧ R ⇒ a`.
    pub under: Formula,
}

/// Result of augmenting a query with approximation guards.
#[derive(Clone, Debug)]
pub struct Augmented {
    pub formula: Formula,
    /// Atoms introduced by the approximations (and not already part of the
    /// original query); the filter stage drops these from region checks.
    pub approx_atoms: BTreeSet<Atom>,
    pub approximations: Vec<AtomApprox>,
}

fn ranges_box(ranges: &Ranges, vars: &BTreeSet<String>) -> IntervalBox {
    let mut names = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    for v in vars {
        let (l, h) = ranges
            .get(v)
            .unwrap_or_else(|| panic!("no range for variable '{}'", v));
        names.push(v.clone());
        lo.push(l.clone());
        hi.push(h.clone());
    }
    IntervalBox::new(names, lo, hi)
}

/// Fold constant atoms into `True`/`False` and flatten trivial connectives.
fn simplify(f: Formula) -> Formula {
    match f {
        Formula::Atom(Atom::Poly { ref term, rel }) if term.is_constant() => {
            let value = term
                .eval(&Default::default())
                .expect("constant term evaluates");
            if rel.holds(&value) {
                Formula::True
            } else {
                Formula::False
            }
        }
        Formula::And(parts) => {
            let mut out = Vec::new();
            for p in parts {
                match simplify(p) {
                    Formula::True => {}
                    Formula::False => return Formula::False,
                    Formula::And(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Formula::and(out)
        }
        Formula::Or(parts) => {
            let mut out = Vec::new();
            for p in parts {
                match simplify(p) {
                    Formula::False => {}
                    Formula::True => return Formula::True,
                    Formula::Or(inner) => out.extend(inner),
                    other => out.push(other),
                }
            }
            Formula::or(out)
        }
        Formula::Not(inner) => match simplify(*inner) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            other => Formula::not(other),
        },
        other => other,
    }
}

/// Formula `⋁ (guard ∧ bound ⋈ 0)` over the pieces, choosing the bound side
/// by relation direction: "less" relations need the lower bound on the over
/// side and the upper bound on the under side.
fn directional(pw: &PwBounds, rel: Relation, over_side: bool) -> Formula {
    debug_assert!(matches!(rel, Relation::Lt | Relation::Le));
    let disjuncts = pw
        .pieces
        .iter()
        .map(|piece| {
            let (guard, bound) = if over_side {
                (&piece.over_guard, &piece.lower)
            } else {
                (&piece.under_guard, &piece.upper)
            };
            let mut parts: Vec<Formula> =
                guard.iter().cloned().map(Formula::Atom).collect();
            parts.push(Formula::Atom(Atom::cmp(bound.clone(), rel, Term::zero())));
            Formula::and(parts)
        })
        .collect();
    simplify(Formula::or(disjuncts))
}

/// Compute the linear approximation pair for a nonlinear atom over the
/// ranges. Callers must skip linear atoms.
pub fn linearize_atom(atom: &Atom, ranges: &Ranges, cfg: &ApproxConfig) -> AtomApprox {
    assert!(!atom.is_linear(), "linearize_atom requires a nonlinear atom");
    let Atom::Poly { term, rel } = atom else {
        unreachable!("argmax atoms are linear")
    };
    let b = ranges_box(ranges, &term.vars());
    let pw = term_bounds(term, &b, cfg.pieces, &cfg.eps, cfg.mode);
    let neg = pw.neg();
    // Canonical atoms only carry {<, <=, =, !=}; the >=/> halves of
    // equalities are handled through the negated term.
    let (over, under) = match rel {
        Relation::Lt | Relation::Le => (
            directional(&pw, *rel, true),
            directional(&pw, *rel, false),
        ),
        Relation::Eq => {
            // θ = 0 is θ <= 0 ∧ −θ <= 0; approximate each half.
            let over = Formula::and(vec![
                directional(&pw, Relation::Le, true),
                directional(&neg, Relation::Le, true),
            ]);
            let under = Formula::and(vec![
                directional(&pw, Relation::Le, false),
                directional(&neg, Relation::Le, false),
            ]);
            (simplify(over), simplify(under))
        }
        Relation::Ne => {
            let over = Formula::or(vec![
                directional(&pw, Relation::Lt, true),
                directional(&neg, Relation::Lt, true),
            ]);
            let under = Formula::or(vec![
                directional(&pw, Relation::Lt, false),
                directional(&neg, Relation::Lt, false),
            ]);
            (simplify(over), simplify(under))
        }
        Relation::Ge | Relation::Gt => unreachable!("atoms are canonicalized"),
    };
    AtomApprox { atom: atom.clone(), over, under }
}

/// Augment a query with approximation guards for every nonlinear atom:
/// `p ∧ ⋀_i ((a_i ⇒ ā_i) ∧ (ḁ_i ⇒ a_i))`. The result is equivalent to `p`
/// on the range box.
pub fn augment(p: &Formula, ranges: &Ranges, cfg: &ApproxConfig) -> Augmented {
    let nonlinear: Vec<Atom> = p
        .atoms()
        .into_iter()
        .filter(|a| !a.is_linear())
        .collect();
    let mut parts = vec![p.clone()];
    let mut approximations = Vec::with_capacity(nonlinear.len());
    for atom in &nonlinear {
        let approx = linearize_atom(atom, ranges, cfg);
        parts.push(Formula::implies(
            Formula::Atom(atom.clone()),
            approx.over.clone(),
        ));
        parts.push(Formula::implies(
            approx.under.clone(),
            Formula::Atom(atom.clone()),
        ));
        approximations.push(approx);
    }
    let formula = Formula::and(parts);
    let original_atoms = p.atoms();
    let mut approx_atoms = BTreeSet::new();
    for approx in &approximations {
        for a in approx.over.atoms().into_iter().chain(approx.under.atoms()) {
            if !original_atoms.contains(&a) {
                approx_atoms.insert(a);
            }
        }
    }
    Augmented { formula, approx_atoms, approximations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};
    use rand::{Rng, SeedableRng};
    use std::collections::BTreeMap;

    fn acc_ranges() -> Ranges {
        let mut r = Ranges::default();
        r.insert("r", int(0), int(100));
        r.insert("rv", int(0), int(100));
        r
    }

    fn sample_state(ranges: &Ranges, rng: &mut impl Rng) -> BTreeMap<String, Rat> {
        ranges
            .0
            .iter()
            .map(|(v, (lo, hi))| {
                (v.clone(), lo + (hi - lo) * frac(rng.gen_range(0..=512), 512))
            })
            .collect()
    }

    #[test]
    fn invariant_atom_approximation_sound() {
        // 200r - rv^2 >= 0 over r,rv ∈ [0,100]^2 at N=1.
        let atom = Atom::cmp(
            Term::var("r").scale(&int(200)).sub(&Term::var("rv").pow(2)),
            Relation::Ge,
            Term::zero(),
        );
        let ranges = acc_ranges();
        let approx = linearize_atom(&atom, &ranges, &ApproxConfig::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let mut under_nonvacuous = false;
        for _ in 0..10_000 {
            let st = sample_state(&ranges, &mut rng);
            let a = atom.eval(&st, &[]).unwrap();
            let over = approx.over.eval(&st, &[]).unwrap();
            let under = approx.under.eval(&st, &[]).unwrap();
            assert!(!a || over, "a ⇒ ā fails at {:?}", st);
            assert!(!under || a, "ḁ ⇒ a fails at {:?}", st);
            under_nonvacuous |= under;
        }
        assert!(under_nonvacuous, "under-approximation is vacuous");
    }

    #[test]
    fn paper_style_two_piece_underapprox_is_sound() {
        // The two-piece region (r >= 50 ∧ rv > 50) ∨ (rv <= 50 ∧ r >= 12.5)
        // under-approximates 200r >= rv^2 on rv ∈ [0,100]; confirm it with
        // the same sampling gate the construction is held to.
        let ranges = acc_ranges();
        let atom = Atom::cmp(
            Term::var("r").scale(&int(200)).sub(&Term::var("rv").pow(2)),
            Relation::Ge,
            Term::zero(),
        );
        let two_piece = Formula::or(vec![
            Formula::and(vec![
                Formula::Atom(Atom::cmp(Term::var("r"), Relation::Ge, Term::constant(int(50)))),
                Formula::Atom(Atom::cmp(Term::var("rv"), Relation::Gt, Term::constant(int(50)))),
            ]),
            Formula::and(vec![
                Formula::Atom(Atom::cmp(Term::var("rv"), Relation::Le, Term::constant(int(50)))),
                Formula::Atom(Atom::cmp(Term::var("r"), Relation::Ge, Term::constant(frac(25, 2)))),
            ]),
        ]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(37);
        for _ in 0..10_000 {
            let st = sample_state(&ranges, &mut rng);
            if two_piece.eval(&st, &[]).unwrap() {
                assert!(atom.eval(&st, &[]).unwrap());
            }
        }
    }

    #[test]
    #[should_panic(expected = "nonlinear atom")]
    fn linear_atom_is_rejected() {
        let atom = Atom::cmp(Term::var("x"), Relation::Gt, Term::zero());
        let mut ranges = Ranges::default();
        ranges.insert("x", int(-1), int(1));
        linearize_atom(&atom, &ranges, &ApproxConfig::default());
    }

    #[test]
    fn vacuous_interval_fallback() {
        // x*y > 0 on [-1,1]^2 in interval mode: over is trivially true,
        // under trivially false.
        let atom = Atom::cmp(
            Term::var("x").mul(&Term::var("y")),
            Relation::Gt,
            Term::zero(),
        );
        let mut ranges = Ranges::default();
        ranges.insert("x", int(-1), int(1));
        ranges.insert("y", int(-1), int(1));
        let cfg = ApproxConfig { mode: ApproxMode::Interval, ..Default::default() };
        let approx = linearize_atom(&atom, &ranges, &cfg);
        assert_eq!(approx.over, Formula::True);
        assert_eq!(approx.under, Formula::False);
    }

    #[test]
    fn augment_structure() {
        // No nonlinear atoms: unchanged formula, no guards.
        let p = Formula::Atom(Atom::cmp(Term::var("x"), Relation::Gt, Term::zero()));
        let mut ranges = Ranges::default();
        ranges.insert("x", int(-2), int(2));
        let aug = augment(&p, &ranges, &ApproxConfig::default());
        assert_eq!(aug.formula, p);
        assert!(aug.approx_atoms.is_empty());

        // Single nonlinear atom: exactly the two added implications. An
        // asymmetric range keeps the secant/tangent bounds non-constant.
        let p = Formula::Atom(Atom::cmp(
            Term::var("x").pow(2),
            Relation::Le,
            Term::constant(int(1)),
        ));
        let mut ranges = Ranges::default();
        ranges.insert("x", int(0), int(2));
        let aug = augment(&p, &ranges, &ApproxConfig::default());
        match &aug.formula {
            Formula::And(parts) => {
                assert_eq!(parts.len(), 3);
                assert_eq!(parts[0], p);
                assert!(matches!(parts[1], Formula::Implies(..)));
                assert!(matches!(parts[2], Formula::Implies(..)));
            }
            other => panic!("expected conjunction, got {:?}", other),
        }
        assert!(!aug.approx_atoms.is_empty());
    }

    #[test]
    fn augmented_query_is_equivalent_on_samples() {
        let mut ranges = Ranges::default();
        ranges.insert("x", int(-2), int(2));
        ranges.insert("y", int(-3), int(3));
        // (x^2 <= 1 | y > x*y) & !(y^2 > 2)
        let p = Formula::and(vec![
            Formula::or(vec![
                Formula::Atom(Atom::cmp(
                    Term::var("x").pow(2),
                    Relation::Le,
                    Term::constant(int(1)),
                )),
                Formula::Atom(Atom::cmp(
                    Term::var("y"),
                    Relation::Gt,
                    Term::var("x").mul(&Term::var("y")),
                )),
            ]),
            Formula::not(Formula::Atom(Atom::cmp(
                Term::var("y").pow(2),
                Relation::Gt,
                Term::constant(int(2)),
            ))),
        ]);
        for pieces in [1, 2] {
            let cfg = ApproxConfig { pieces, ..Default::default() };
            let aug = augment(&p, &ranges, &cfg);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
            for _ in 0..10_000 {
                let st: BTreeMap<String, Rat> = ranges
                    .0
                    .iter()
                    .map(|(v, (lo, hi))| {
                        (v.clone(), lo + (hi - lo) * frac(rng.gen_range(0..=512), 512))
                    })
                    .collect();
                assert_eq!(
                    p.eval(&st, &[]).unwrap(),
                    aug.formula.eval(&st, &[]).unwrap(),
                    "equivalence fails at {:?}",
                    st
                );
            }
        }
    }

    #[test]
    fn gap_volume_shrinks_with_more_pieces() {
        // Monte-Carlo estimate of vol(ā ∧ ¬a) is non-increasing from N to 2N.
        let atom = Atom::cmp(
            Term::var("r").scale(&int(200)).sub(&Term::var("rv").pow(2)),
            Relation::Ge,
            Term::zero(),
        );
        let ranges = acc_ranges();
        let gap = |pieces: u32| -> u32 {
            let cfg = ApproxConfig { pieces, ..Default::default() };
            let approx = linearize_atom(&atom, &ranges, &cfg);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
            let mut count = 0;
            for _ in 0..4000 {
                let st = sample_state(&ranges, &mut rng);
                if approx.over.eval(&st, &[]).unwrap() && !atom.eval(&st, &[]).unwrap() {
                    count += 1;
                }
            }
            count
        };
        assert!(gap(2) <= gap(1));
    }
}
