//! Guarded piecewise-linear bounds for polynomial terms over a range box.

use num_traits::Zero;

use crate::formula::{Atom, Relation, Term};
use crate::rat::{self, Rat};
use crate::theory::{interval_eval, IntervalBox};

use super::univariate::{univariate_bounds, UnivariatePiece};

/// One region of the range box with linear bounds `lower ≤ θ ≤ upper`.
///
/// `over_guard` is the region with breakpoints widened by ε (used on the
/// over-approximation side, where widening only grows the approximated
/// set); `under_guard` is the exact region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwPiece {
    pub over_guard: Vec<Atom>,
    pub under_guard: Vec<Atom>,
    pub lower: Term,
    pub upper: Term,
}

/// A cover of the range box by guarded bound pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PwBounds {
    pub pieces: Vec<PwPiece>,
}

impl PwBounds {
    fn exact(term: Term) -> PwBounds {
        PwBounds {
            pieces: vec![PwPiece {
                over_guard: vec![],
                under_guard: vec![],
                lower: term.clone(),
                upper: term,
            }],
        }
    }

    fn constant(lo: Rat, hi: Rat) -> PwBounds {
        PwBounds {
            pieces: vec![PwPiece {
                over_guard: vec![],
                under_guard: vec![],
                lower: Term::constant(lo),
                upper: Term::constant(hi),
            }],
        }
    }

    /// Bounds of `-θ` (lower and upper swap and negate).
    pub fn neg(&self) -> PwBounds {
        PwBounds {
            pieces: self
                .pieces
                .iter()
                .map(|p| PwPiece {
                    over_guard: p.over_guard.clone(),
                    under_guard: p.under_guard.clone(),
                    lower: p.upper.neg(),
                    upper: p.lower.neg(),
                })
                .collect(),
        }
    }

    /// Sum of two bounds: the cross product of the piece covers.
    fn combine(&self, other: &PwBounds, b: &IntervalBox) -> PwBounds {
        let mut pieces = Vec::with_capacity(self.pieces.len() * other.pieces.len());
        for a in &self.pieces {
            for c in &other.pieces {
                let mut over_guard = a.over_guard.clone();
                over_guard.extend(c.over_guard.iter().cloned());
                let mut under_guard = a.under_guard.clone();
                under_guard.extend(c.under_guard.iter().cloned());
                let piece = PwPiece {
                    over_guard,
                    under_guard,
                    lower: a.lower.add(&c.lower),
                    upper: a.upper.add(&c.upper),
                };
                if guard_feasible(&piece.under_guard, b) {
                    pieces.push(piece);
                }
            }
        }
        PwBounds { pieces }
    }
}

/// Cheap interval test: can the guard conjunction hold anywhere in the box?
fn guard_feasible(guard: &[Atom], b: &IntervalBox) -> bool {
    guard.iter().all(|atom| match atom {
        Atom::Poly { term, rel } => {
            let e = interval_eval(term, b);
            match rel {
                Relation::Lt => e.lo < rat::zero(),
                Relation::Le => e.lo <= rat::zero(),
                Relation::Eq => e.contains(&rat::zero()),
                Relation::Ne => !(e.lo.is_zero() && e.hi.is_zero()),
                Relation::Ge => e.hi >= rat::zero(),
                Relation::Gt => e.hi > rat::zero(),
            }
        }
        Atom::ArgmaxIs(_) => true,
    })
}

/// Translate univariate pieces over the value `v` of a linear form into
/// guarded bounds. Guards at the ends of the form's own range are omitted
/// (the range box already enforces them); interior breakpoints get the
/// ε overlap on the over side.
fn pieces_to_pw(pieces: &[UnivariatePiece], form: &Term, eps: &Rat) -> PwBounds {
    let n = pieces.len();
    let out = pieces
        .iter()
        .enumerate()
        .map(|(i, piece)| {
            let mut over_guard = Vec::new();
            let mut under_guard = Vec::new();
            if i > 0 {
                // form >= lo (over side: form >= lo - eps)
                under_guard.push(Atom::cmp(
                    form.clone(),
                    Relation::Ge,
                    Term::constant(piece.lo.clone()),
                ));
                over_guard.push(Atom::cmp(
                    form.clone(),
                    Relation::Ge,
                    Term::constant(&piece.lo - eps),
                ));
            }
            if i + 1 < n {
                under_guard.push(Atom::cmp(
                    form.clone(),
                    Relation::Le,
                    Term::constant(piece.hi.clone()),
                ));
                over_guard.push(Atom::cmp(
                    form.clone(),
                    Relation::Le,
                    Term::constant(&piece.hi + eps),
                ));
            }
            let line_term = |line: &super::univariate::Line| {
                form.scale(&line.slope)
                    .add(&Term::constant(line.intercept.clone()))
            };
            PwPiece {
                over_guard,
                under_guard,
                lower: line_term(&piece.under),
                upper: line_term(&piece.over),
            }
        })
        .collect();
    PwBounds { pieces: out }
}

/// How nonlinear monomials are approximated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ApproxMode {
    /// Piecewise secant/tangent bounds; bilinear products are rewritten
    /// through squares of linear forms.
    Overt,
    /// Constant interval bounds over the box.
    Interval,
}

/// Piecewise-linear bounds of a polynomial over the range box.
///
/// Per monomial: exact for degree ≤ 1, univariate pieces for `c·v^k`,
/// the identity `xy = ((x+y)² − (x−y)²)/4` for products of two distinct
/// variables, and constant interval bounds for anything denser. Monomial
/// bounds are summed over the cross product of their piece covers.
pub fn term_bounds(term: &Term, b: &IntervalBox, n: u32, eps: &Rat, mode: ApproxMode) -> PwBounds {
    if mode == ApproxMode::Interval {
        let e = interval_eval(term, b);
        return PwBounds::constant(e.lo, e.hi);
    }
    let mut acc = PwBounds::exact(Term::zero());
    for (pp, coeff) in term.monomials() {
        let vars: Vec<(&String, u32)> = pp.0.iter().map(|(v, e)| (v, *e)).collect();
        let piece = match vars.as_slice() {
            [] | [(_, 1)] => PwBounds::exact(Term::monomial(coeff.clone(), pp.clone())),
            [(v, k)] => {
                let (lo, hi) = b
                    .interval_of(v)
                    .unwrap_or_else(|| panic!("no range for '{}'", v));
                let pieces = univariate_bounds(coeff, *k, lo, hi, n);
                pieces_to_pw(&pieces, &Term::var(v), eps)
            }
            [(x, 1), (y, 1)] => {
                // c·x·y = (c/4)(x+y)^2 − (c/4)(x−y)^2
                let quarter = coeff / rat::int(4);
                let sum = Term::var(x).add(&Term::var(y));
                let diff = Term::var(x).sub(&Term::var(y));
                let plus = square_bounds(&quarter, &sum, b, n, eps);
                let minus = square_bounds(&-quarter, &diff, b, n, eps);
                plus.combine(&minus, b)
            }
            _ => {
                let e = interval_eval(&Term::monomial(coeff.clone(), pp.clone()), b);
                PwBounds::constant(e.lo, e.hi)
            }
        };
        acc = acc.combine(&piece, b);
    }
    acc
}

/// Bounds of `c·ℓ(x)²` for a linear form ℓ: univariate bounds in the value
/// of the form, substituted back.
fn square_bounds(c: &Rat, form: &Term, b: &IntervalBox, n: u32, eps: &Rat) -> PwBounds {
    let e = interval_eval(form, b);
    let pieces = univariate_bounds(c, 2, &e.lo, &e.hi, n);
    pieces_to_pw(&pieces, form, eps)
}
