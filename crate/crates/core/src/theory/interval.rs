//! Exact rational interval arithmetic for polynomial enclosure.


use crate::formula::Term;
use crate::rat::{self, Rat};

use super::linsys::IntervalBox;

/// A closed rational interval.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn point(v: Rat) -> Interval {
        Interval { lo: v.clone(), hi: v }
    }

    pub fn new(lo: Rat, hi: Rat) -> Interval {
        debug_assert!(lo <= hi);
        Interval { lo, hi }
    }

    pub fn contains(&self, v: &Rat) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let candidates = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = candidates.iter().min().unwrap().clone();
        let hi = candidates.iter().max().unwrap().clone();
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &Rat) -> Interval {
        if k >= &rat::zero() {
            Interval { lo: &self.lo * k, hi: &self.hi * k }
        } else {
            Interval { lo: &self.hi * k, hi: &self.lo * k }
        }
    }

    /// Tight power of an interval: even powers account for a sign straddle.
    pub fn pow(&self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(rat::one());
        }
        let pl = rat::pow(&self.lo, e);
        let ph = rat::pow(&self.hi, e);
        if e % 2 == 1 {
            Interval { lo: pl, hi: ph }
        } else if self.lo >= rat::zero() {
            Interval { lo: pl, hi: ph }
        } else if self.hi <= rat::zero() {
            Interval { lo: ph, hi: pl }
        } else {
            Interval { lo: rat::zero(), hi: pl.max(ph) }
        }
    }
}

/// Enclosure of a polynomial over a box: the sum of per-monomial tight
/// interval products. Every point value of the term inside the box lies in
/// the returned interval (arithmetic is exact, so no outward rounding is
/// needed).
pub fn interval_eval(term: &Term, b: &IntervalBox) -> Interval {
    let mut acc = Interval::point(rat::zero());
    for (pp, coeff) in term.monomials() {
        let mut m = Interval::point(rat::one());
        for (var, exp) in &pp.0 {
            let (lo, hi) = b
                .interval_of(var)
                .unwrap_or_else(|| panic!("variable '{}' missing from box", var));
            let base = Interval::new(lo.clone(), hi.clone());
            m = m.mul(&base.pow(*exp));
        }
        acc = acc.add(&m.scale(coeff));
    }
    acc
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
    fn square_over_straddling_interval() {
        // x^2 over [-1, 2] is exactly [0, 4]
        let t = Term::var("x").pow(2);
        let i = interval_eval(&t, &boxed(&[("x", -1, 2)]));
        assert_eq!(i, Interval::new(int(0), int(4)));
    }

    #[test]
    fn product_bounds() {
        // x*y over [-1,1]^2 is [-1, 1]
        let t = Term::var("x").mul(&Term::var("y"));
        let i = interval_eval(&t, &boxed(&[("x", -1, 1), ("y", -1, 1)]));
        assert_eq!(i, Interval::new(int(-1), int(1)));
    }

    #[test]
    fn constants_are_points() {
        let t = Term::constant(int(5));
        let i = interval_eval(&t, &boxed(&[("x", -10, 10)]));
        assert_eq!(i, Interval::point(int(5)));
    }

    #[test]
    fn containment_on_samples() {
        use rand::{Rng, SeedableRng};
        // 2x^2*y - y^3 + x/2 - 3 over [-2,3]x[-1,2]
        let t = Term::var("x")
            .pow(2)
            .mul(&Term::var("y"))
            .scale(&int(2))
            .sub(&Term::var("y").pow(3))
            .add(&Term::var("x").scale(&frac(1, 2)))
            .sub(&Term::constant(int(3)));
        let b = boxed(&[("x", -2, 3), ("y", -1, 2)]);
        let enclosure = interval_eval(&t, &b);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10_000 {
            let x = frac(rng.gen_range(-2 * 64..=3 * 64), 64);
            let y = frac(rng.gen_range(-64..=2 * 64), 64);
            let mut st = std::collections::BTreeMap::new();
            st.insert("x".to_string(), x);
            st.insert("y".to_string(), y);
            let v = t.eval(&st).unwrap();
            assert!(enclosure.contains(&v));
        }
    }
}
