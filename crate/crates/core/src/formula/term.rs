//! Multivariate polynomials with exact rational coefficients.
//!
//! A [`Term`] is kept in canonical form at all times: a map from power
//! products to non-zero coefficients, with variables in lexicographic order
//! inside each power product. Degree-0 entries use the empty power product.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::Zero;

use crate::rat::{self, Rat};

/// A power product `v1^e1 * v2^e2 * ...` with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PowerProduct(pub BTreeMap<String, u32>);

impl PowerProduct {
    fn unit() -> Self {
        PowerProduct(BTreeMap::new())
    }

    fn var(name: &str, exp: u32) -> Self {
        let mut m = BTreeMap::new();
        if exp > 0 {
            m.insert(name.to_string(), exp);
        }
        PowerProduct(m)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            *m.entry(v.clone()).or_insert(0) += e;
        }
        PowerProduct(m)
    }

    /// Total degree of the power product.
    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }
}

/// A polynomial in canonical sum-of-monomials form.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Term {
    monomials: BTreeMap<PowerProduct, Rat>,
}

impl Term {
    /// The zero polynomial.
    pub fn zero() -> Self {
        Term::default()
    }

    /// A constant polynomial.
    pub fn constant(c: Rat) -> Self {
        let mut t = Term::zero();
        if !c.is_zero() {
            t.monomials.insert(PowerProduct::unit(), c);
        }
        t
    }

    /// The polynomial `v`.
    pub fn var(name: &str) -> Self {
        Term::monomial(rat::one(), PowerProduct::var(name, 1))
    }

    /// A single monomial `c * pp`.
    pub fn monomial(coeff: Rat, pp: PowerProduct) -> Self {
        let mut t = Term::zero();
        if !coeff.is_zero() {
            t.monomials.insert(pp, coeff);
        }
        t
    }

    /// Iterate over `(power product, coefficient)` pairs in canonical order.
    pub fn monomials(&self) -> impl Iterator<Item = (&PowerProduct, &Rat)> {
        self.monomials.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    /// `true` when the total degree is at most 1.
    pub fn is_linear(&self) -> bool {
        self.degree() <= 1
    }

    /// `true` when the polynomial is a constant (possibly zero).
    pub fn is_constant(&self) -> bool {
        self.monomials.keys().all(|pp| pp.0.is_empty())
    }

    /// Total degree; 0 for constants and the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.monomials.keys().map(|pp| pp.degree()).max().unwrap_or(0)
    }

    /// The set of variables occurring with non-zero coefficient.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for pp in self.monomials.keys() {
            out.extend(pp.0.keys().cloned());
        }
        out
    }

    fn insert(&mut self, pp: PowerProduct, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.monomials.entry(pp) {
            Entry::Vacant(e) => {
                e.insert(coeff);
            }
            Entry::Occupied(mut e) => {
                let sum = e.get() + coeff;
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Term) -> Term {
        let mut out = self.clone();
        for (pp, c) in &other.monomials {
            out.insert(pp.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Term) -> Term {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Term {
        let mut out = Term::zero();
        for (pp, c) in &self.monomials {
            out.monomials.insert(pp.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> Term {
        let mut out = Term::zero();
        if k.is_zero() {
            return out;
        }
        for (pp, c) in &self.monomials {
            out.monomials.insert(pp.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Term) -> Term {
        let mut out = Term::zero();
        for (pa, ca) in &self.monomials {
            for (pb, cb) in &other.monomials {
                out.insert(pa.mul(pb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, exp: u32) -> Term {
        let mut acc = Term::constant(rat::one());
        for _ in 0..exp {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact evaluation at a (total) variable assignment.
    ///
    /// Returns the name of the first missing variable on failure.
    pub fn eval(&self, state: &BTreeMap<String, Rat>) -> Result<Rat, String> {
        let mut total = rat::zero();
        for (pp, c) in &self.monomials {
            let mut m = c.clone();
            for (v, e) in &pp.0 {
                let value = state.get(v).ok_or_else(|| v.clone())?;
                m *= rat::pow(value, *e);
            }
            total += m;
        }
        Ok(total)
    }

    /// Substitute each variable in `subs` by a polynomial; other variables
    /// are left in place.
    pub fn substitute(&self, subs: &BTreeMap<String, Term>) -> Term {
        let mut out = Term::zero();
        for (pp, c) in &self.monomials {
            let mut m = Term::constant(c.clone());
            for (v, e) in &pp.0 {
                let base = subs
                    .get(v)
                    .cloned()
                    .unwrap_or_else(|| Term::var(v));
                m = m.mul(&base.pow(*e));
            }
            out = out.add(&m);
        }
        out
    }

    /// Decompose a linear term into `(coefficients, constant)`.
    ///
    /// Returns `None` if the degree exceeds 1.
    pub fn linear_parts(&self) -> Option<(BTreeMap<String, Rat>, Rat)> {
        if !self.is_linear() {
            return None;
        }
        let mut coeffs = BTreeMap::new();
        let mut constant = rat::zero();
        for (pp, c) in &self.monomials {
            match pp.0.len() {
                0 => constant = c.clone(),
                1 => {
                    let (v, _) = pp.0.iter().next().unwrap();
                    coeffs.insert(v.clone(), c.clone());
                }
                _ => unreachable!("linear term with multi-variable monomial"),
            }
        }
        Some((coeffs, constant))
    }

    /// Coefficient of the canonically first monomial, if any.
    pub fn leading_coeff(&self) -> Option<&Rat> {
        self.monomials.values().next_back()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.monomials.is_empty() {
            return write!(f, "0");
        }
        // Highest-degree monomials first for readability.
        let mut first = true;
        for (pp, c) in self.monomials.iter().rev() {
            let mag = crate::rat::abs(c);
            if first {
                if c < &rat::zero() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c < &rat::zero() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = mag == rat::one();
            if pp.0.is_empty() {
                write!(f, "{}", rat::display(&mag))?;
            } else {
                let mut wrote = false;
                if !coeff_is_one {
                    write!(f, "{}", rat::display(&mag))?;
                    wrote = true;
                }
                for (v, e) in &pp.0 {
                    if wrote {
                        write!(f, "*")?;
                    }
                    if *e == 1 {
                        write!(f, "{}", v)?;
                    } else {
                        write!(f, "{}^{}", v, e)?;
                    }
                    wrote = true;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};

    fn st(pairs: &[(&str, Rat)]) -> BTreeMap<String, Rat> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn canonical_no_zero_monomials() {
        let x = Term::var("x");
        let t = x.sub(&x);
        assert!(t.is_zero());
        assert_eq!(t.degree(), 0);
    }

    #[test]
    fn degree_and_vars_stable() {
        // 2*x^2*y - 3*y + 1/2
        let t = Term::var("x")
            .pow(2)
            .mul(&Term::var("y"))
            .scale(&int(2))
            .add(&Term::var("y").scale(&int(-3)))
            .add(&Term::constant(frac(1, 2)));
        assert_eq!(t.degree(), 3);
        assert_eq!(
            t.vars().into_iter().collect::<Vec<_>>(),
            vec!["x".to_string(), "y".to_string()]
        );
        // Re-normalizing through arithmetic keeps degree stable.
        let t2 = t.add(&Term::zero()).mul(&Term::constant(int(1)));
        assert_eq!(t2, t);
    }

    #[test]
    fn eval_exact() {
        // 200*r - rv^2 at r=2, rv=20 -> 0 (boundary case)
        let t = Term::var("r")
            .scale(&int(200))
            .sub(&Term::var("rv").pow(2));
        let v = t.eval(&st(&[("r", int(2)), ("rv", int(20))])).unwrap();
        assert_eq!(v, int(0));
        assert_eq!(t.eval(&st(&[("r", int(2))])), Err("rv".to_string()));
    }

    #[test]
    fn substitution_expands() {
        // (x*y) with x := u + 1 gives u*y + y
        let t = Term::var("x").mul(&Term::var("y"));
        let mut subs = BTreeMap::new();
        subs.insert("x".to_string(), Term::var("u").add(&Term::constant(int(1))));
        let s = t.substitute(&subs);
        let expect = Term::var("u").mul(&Term::var("y")).add(&Term::var("y"));
        assert_eq!(s, expect);
    }

    #[test]
    fn linear_parts_roundtrip() {
        let t = Term::var("x").scale(&int(3)).add(&Term::constant(frac(-1, 2)));
        let (coeffs, c) = t.linear_parts().unwrap();
        assert_eq!(coeffs.get("x"), Some(&int(3)));
        assert_eq!(c, frac(-1, 2));
        assert!(Term::var("x").pow(2).linear_parts().is_none());
    }

    #[test]
    fn display_is_readable() {
        let t = Term::var("x")
            .pow(2)
            .sub(&Term::var("x").scale(&int(2)))
            .add(&Term::constant(int(1)));
        assert_eq!(format!("{}", t), "x^2 - 2*x + 1");
    }
}
