//! Closed-form affine upper bound for the maximum of two affine functions
//! over a box, and the mirrored lower bound for their minimum.

use crate::formula::Term;
use crate::rat::{self, Rat};
use crate::theory::IntervalBox;

/// Parameters of the bound `h = μ·f + (1−μ)·g + c`, which interpolates `f`
/// at `x_f` and `g` at `x_g` exactly and dominates `max(f, g)` on the box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxBoundParams {
    pub mu: Rat,
    pub c: Rat,
    pub gamma: Rat,
    pub x_f: Vec<Rat>,
    pub x_g: Vec<Rat>,
}

/// Result of [`max_upper_bound`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaxBound {
    Bound(MaxBoundParams),
    /// One function dominates on the whole box; the max is that function.
    FDominates,
    GDominates,
}

fn eval_at(t: &Term, b: &IntervalBox, point: &[Rat]) -> Rat {
    let state = b
        .vars
        .iter()
        .cloned()
        .zip(point.iter().cloned())
        .collect();
    t.eval(&state).expect("affine function over box variables")
}

/// Corner of the box maximizing an affine function: coordinatewise sign
/// rule, ties resolved to the lower endpoint for determinism.
fn argmax_corner(t: &Term, b: &IntervalBox) -> Vec<Rat> {
    let (coeffs, _) = t.linear_parts().expect("affine function");
    b.vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            match coeffs.get(v) {
                Some(c) if c > &rat::zero() => b.hi[i].clone(),
                _ => b.lo[i].clone(),
            }
        })
        .collect()
}

/// Affine upper bound for `max(f, g)` over a closed interval box.
///
/// `μ` and `c` solve the two interpolation equations
/// `μ f(x_f) + (1−μ) g(x_f) + c = f(x_f)` and
/// `μ f(x_g) + (1−μ) g(x_g) + c = g(x_g)`
/// directly, where `x_f` maximizes `f − g` and `x_g` maximizes `g − f`.
/// When one function never strictly wins, the other is returned as exact.
pub fn max_upper_bound(f: &Term, g: &Term, b: &IntervalBox) -> MaxBound {
    assert!(f.is_linear() && g.is_linear(), "bounds require affine inputs");
    let diff_fg = f.sub(g);
    let x_f = argmax_corner(&diff_fg, b);
    let x_g = argmax_corner(&diff_fg.neg(), b);
    let f_at_xf = eval_at(f, b, &x_f);
    let g_at_xf = eval_at(g, b, &x_f);
    let f_at_xg = eval_at(f, b, &x_g);
    let g_at_xg = eval_at(g, b, &x_g);
    if &f_at_xf - &g_at_xf <= rat::zero() {
        // f - g <= 0 everywhere: g dominates.
        return MaxBound::GDominates;
    }
    if &g_at_xg - &f_at_xg <= rat::zero() {
        return MaxBound::FDominates;
    }
    let gamma = &f_at_xf - &f_at_xg - &g_at_xf + &g_at_xg;
    debug_assert!(gamma > rat::zero());
    let mu = (&f_at_xf - &g_at_xf) / &gamma;
    let c = (&f_at_xf - &g_at_xf) * (&g_at_xg - &f_at_xg) / &gamma;
    MaxBound::Bound(MaxBoundParams { mu, c, gamma, x_f, x_g })
}

impl MaxBoundParams {
    /// The bounding function `h = μ f + (1−μ) g + c` as a term.
    pub fn bound_term(&self, f: &Term, g: &Term) -> Term {
        f.scale(&self.mu)
            .add(&g.scale(&(rat::one() - &self.mu)))
            .add(&Term::constant(self.c.clone()))
    }
}

/// Result of [`min_lower_bound`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MinBound {
    /// `ℓ ≤ min(f, g)` on the box.
    Bound(Term),
    FDominates,
    GDominates,
}

/// Affine lower bound for `min(f, g)`: the mirror `−max(−f, −g)`.
pub fn min_lower_bound(f: &Term, g: &Term, b: &IntervalBox) -> MinBound {
    match max_upper_bound(&f.neg(), &g.neg(), b) {
        MaxBound::Bound(params) => {
            MinBound::Bound(params.bound_term(&f.neg(), &g.neg()).neg())
        }
        // min(f, g) = f exactly when -f dominates -g.
        MaxBound::FDominates => MinBound::FDominates,
        MaxBound::GDominates => MinBound::GDominates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn boxed(pairs: &[(&str, i64, i64)]) -> IntervalBox {
        IntervalBox::new(
            pairs.iter().map(|(v, _, _)| v.to_string()).collect(),
            pairs.iter().map(|(_, l, _)| int(*l)).collect(),
            pairs.iter().map(|(_, _, h)| int(*h)).collect(),
        )
    }

    #[test]
    fn abs_bound_is_tight_at_corners() {
        // f = x, g = -x on [-1,1]: γ=4, μ=1/2, c=1, bound h(x) = 1 >= |x|.
        let f = Term::var("x");
        let g = Term::var("x").neg();
        let b = boxed(&[("x", -1, 1)]);
        match max_upper_bound(&f, &g, &b) {
            MaxBound::Bound(p) => {
                assert_eq!(p.x_f, vec![int(1)]);
                assert_eq!(p.x_g, vec![int(-1)]);
                assert_eq!(p.gamma, int(4));
                assert_eq!(p.mu, frac(1, 2));
                assert_eq!(p.c, int(1));
                let h = p.bound_term(&f, &g);
                assert_eq!(h, Term::constant(int(1)));
            }
            other => panic!("expected bound, got {:?}", other),
        }
    }

    #[test]
    fn constant_domination() {
        let f = Term::constant(int(5));
        let g = Term::constant(int(3));
        let b = boxed(&[("x", 0, 1)]);
        assert_eq!(max_upper_bound(&f, &g, &b), MaxBound::FDominates);
        assert_eq!(max_upper_bound(&g, &f, &b), MaxBound::GDominates);
    }

    #[test]
    fn two_variable_bound() {
        // f = x, g = y on [0,1]^2: μ=1/2, c=1/2, h = (x+y+1)/2.
        let f = Term::var("x");
        let g = Term::var("y");
        let b = boxed(&[("x", 0, 1), ("y", 0, 1)]);
        match max_upper_bound(&f, &g, &b) {
            MaxBound::Bound(p) => {
                assert_eq!(p.gamma, int(2));
                assert_eq!(p.mu, frac(1, 2));
                assert_eq!(p.c, frac(1, 2));
                let h = p.bound_term(&f, &g);
                let expect = Term::var("x")
                    .scale(&frac(1, 2))
                    .add(&Term::var("y").scale(&frac(1, 2)))
                    .add(&Term::constant(frac(1, 2)));
                assert_eq!(h, expect);
            }
            other => panic!("expected bound, got {:?}", other),
        }
    }

    #[test]
    fn bound_dominates_max_on_samples_and_is_exact_at_corners() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..40 {
            let f = Term::var("x")
                .scale(&frac(rng.gen_range(-12..=12), 4))
                .add(&Term::var("y").scale(&frac(rng.gen_range(-12..=12), 4)))
                .add(&Term::constant(frac(rng.gen_range(-12..=12), 4)));
            let g = Term::var("x")
                .scale(&frac(rng.gen_range(-12..=12), 4))
                .add(&Term::var("y").scale(&frac(rng.gen_range(-12..=12), 4)))
                .add(&Term::constant(frac(rng.gen_range(-12..=12), 4)));
            let b = boxed(&[("x", -2, 3), ("y", -1, 2)]);
            match max_upper_bound(&f, &g, &b) {
                MaxBound::Bound(p) => {
                    let h = p.bound_term(&f, &g);
                    // Exact interpolation at the two argmax corners.
                    let hf = eval_at(&h, &b, &p.x_f);
                    let ff = eval_at(&f, &b, &p.x_f);
                    assert_eq!(hf, ff);
                    let hg = eval_at(&h, &b, &p.x_g);
                    let gg = eval_at(&g, &b, &p.x_g);
                    assert_eq!(hg, gg);
                    for _ in 0..25 {
                        let pnt = vec![
                            frac(rng.gen_range(-2 * 12..=3 * 12), 12),
                            frac(rng.gen_range(-12..=2 * 12), 12),
                        ];
                        let hv = eval_at(&h, &b, &pnt);
                        let fv = eval_at(&f, &b, &pnt);
                        let gv = eval_at(&g, &b, &pnt);
                        assert!(hv >= fv.clone().max(gv.clone()));
                    }
                }
                MaxBound::FDominates => {
                    for _ in 0..25 {
                        let pnt = vec![
                            frac(rng.gen_range(-2 * 12..=3 * 12), 12),
                            frac(rng.gen_range(-12..=2 * 12), 12),
                        ];
                        assert!(eval_at(&f, &b, &pnt) >= eval_at(&g, &b, &pnt));
                    }
                }
                MaxBound::GDominates => {
                    for _ in 0..25 {
                        let pnt = vec![
                            frac(rng.gen_range(-2 * 12..=3 * 12), 12),
                            frac(rng.gen_range(-12..=2 * 12), 12),
                        ];
                        assert!(eval_at(&g, &b, &pnt) >= eval_at(&f, &b, &pnt));
                    }
                }
            }
        }
    }

    #[test]
    fn min_mirror() {
        // min(x, -x) on [-1,1] is bounded below by -1.
        let f = Term::var("x");
        let g = Term::var("x").neg();
        let b = boxed(&[("x", -1, 1)]);
        match min_lower_bound(&f, &g, &b) {
            MinBound::Bound(l) => assert_eq!(l, Term::constant(int(-1))),
            other => panic!("expected bound, got {:?}", other),
        }
    }
}
