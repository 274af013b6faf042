//! Exact rational scalars and parsing helpers.
//!
//! Everything in the engine that carries semantic weight (coefficients,
//! witnesses, bounds) is a [`Rat`]. Floating point never enters the pipeline;
//! decimal literals in input files are converted digit-by-digit.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar used throughout the engine.
pub type Rat = BigRational;

/// `0` as a [`Rat`].
pub fn zero() -> Rat {
    Rat::zero()
}

/// `1` as a [`Rat`].
pub fn one() -> Rat {
    Rat::one()
}

/// Build a rational from an integer.
pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// Build a rational `num/den`. Panics on a zero denominator.
pub fn frac(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Parse a rational literal: an integer (`-3`), a fraction (`2/5`) or a
/// decimal (`0.125`, `1e-3`, `2.5e2`). The decimal form is converted exactly
/// (no float round-trip).
pub fn parse_rat(text: &str) -> Option<Rat> {
    let s = text.trim();
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let num: BigInt = n.trim().parse().ok()?;
        let den: BigInt = d.trim().parse().ok()?;
        if den.is_zero() {
            return None;
        }
        return Some(Rat::new(num, den));
    }
    // Decimal with optional exponent.
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((i, f)) => (i, f),
        None => (mantissa, ""),
    };
    let negative = int_part.starts_with('-');
    let int_digits = int_part.trim_start_matches(['+', '-']);
    if int_digits.chars().any(|c| !c.is_ascii_digit())
        || frac_part.chars().any(|c| !c.is_ascii_digit())
        || (int_digits.is_empty() && frac_part.is_empty())
    {
        return None;
    }
    let digits = format!("{}{}", int_digits, frac_part);
    let unscaled: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rat::from_integer(unscaled);
    let shift = exp - scale;
    if shift >= 0 {
        value *= Rat::from_integer(ten.pow(shift as u32));
    } else {
        value /= Rat::from_integer(ten.pow((-shift) as u32));
    }
    if negative {
        value = -value;
    }
    Some(value)
}

/// Raise a rational to a non-negative integer power.
pub fn pow(base: &Rat, exp: u32) -> Rat {
    let mut acc = one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

/// Render a rational as `p/q` (or just `p` when integral).
pub fn display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Midpoint of two rationals.
pub fn midpoint(a: &Rat, b: &Rat) -> Rat {
    (a + b) / int(2)
}

/// Absolute value.
pub fn abs(r: &Rat) -> Rat {
    r.abs()
}
