//! Piecewise-linear bounds for univariate monomials `c·v^k`.

use num_traits::{Signed, Zero};

use crate::rat::{self, Rat};

/// A line `slope·v + intercept`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub slope: Rat,
    pub intercept: Rat,
}

impl Line {
    pub fn at(&self, v: &Rat) -> Rat {
        &self.slope * v + &self.intercept
    }
}

/// One sub-interval with its bounding lines: `under ≤ c·v^k ≤ over`
/// pointwise on `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnivariatePiece {
    pub lo: Rat,
    pub hi: Rat,
    pub over: Line,
    pub under: Line,
}

fn value(c: &Rat, k: u32, v: &Rat) -> Rat {
    c * rat::pow(v, k)
}

fn derivative(c: &Rat, k: u32, v: &Rat) -> Rat {
    c * rat::int(k as i64) * rat::pow(v, k - 1)
}

fn secant(c: &Rat, k: u32, p: &Rat, q: &Rat) -> Line {
    debug_assert!(p < q);
    let fp = value(c, k, p);
    let fq = value(c, k, q);
    let slope = (&fq - &fp) / (q - p);
    let intercept = fp - &slope * p;
    Line { slope, intercept }
}

fn tangent_at(c: &Rat, k: u32, m: &Rat) -> Line {
    let slope = derivative(c, k, m);
    let intercept = value(c, k, m) - &slope * m;
    Line { slope, intercept }
}

/// Piecewise-linear over- and under-bounds of `c·v^k` on `[lo, hi]` with
/// `n ≥ 1` pieces.
///
/// On convex pieces the secant bounds from above, the midpoint tangent from
/// below; concave pieces mirror this. Odd powers `k ≥ 3` straddling zero
/// are split at the inflection first; remaining splits bisect the widest
/// piece. Degree ≤ 1 monomials are returned exactly as a single piece.
pub fn univariate_bounds(c: &Rat, k: u32, lo: &Rat, hi: &Rat, n: u32) -> Vec<UnivariatePiece> {
    assert!(n >= 1, "piece count must be at least 1");
    assert!(lo <= hi, "empty interval");
    if k <= 1 || c.is_zero() || lo == hi {
        let line = if lo == hi && k > 1 {
            // A point interval: constant value.
            Line { slope: rat::zero(), intercept: value(c, k, lo) }
        } else if k == 0 {
            Line { slope: rat::zero(), intercept: c.clone() }
        } else if k == 1 {
            Line { slope: c.clone(), intercept: rat::zero() }
        } else {
            Line { slope: rat::zero(), intercept: rat::zero() }
        };
        return vec![UnivariatePiece {
            lo: lo.clone(),
            hi: hi.clone(),
            over: line.clone(),
            under: line,
        }];
    }

    // Convexity regions: odd powers k >= 3 inflect at zero.
    let mut boundaries: Vec<Rat> = vec![lo.clone(), hi.clone()];
    if k >= 3 && k % 2 == 1 && lo < &rat::zero() && &rat::zero() < hi {
        boundaries.insert(1, rat::zero());
    }
    // Bisect the widest piece (leftmost tie) until n pieces exist.
    while boundaries.len() - 1 < n as usize {
        let mut widest = 0;
        let mut width = &boundaries[1] - &boundaries[0];
        for i in 1..boundaries.len() - 1 {
            let w = &boundaries[i + 1] - &boundaries[i];
            if w > width {
                widest = i;
                width = w;
            }
        }
        let mid = rat::midpoint(&boundaries[widest], &boundaries[widest + 1]);
        boundaries.insert(widest + 1, mid);
    }

    let mut pieces = Vec::with_capacity(boundaries.len() - 1);
    for w in boundaries.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if p == q {
            let line = Line { slope: rat::zero(), intercept: value(c, k, p) };
            pieces.push(UnivariatePiece { lo: p.clone(), hi: q.clone(), over: line.clone(), under: line });
            continue;
        }
        // Sign of f'' = c·k(k−1)·v^(k−2) on the piece (no zero straddle).
        let vpow_sign = if (k - 2) % 2 == 0 {
            1
        } else if p >= &rat::zero() {
            1
        } else {
            -1
        };
        let convex = if c.is_positive() { vpow_sign > 0 } else { vpow_sign < 0 };
        let sec = secant(c, k, p, q);
        let tan = tangent_at(c, k, &rat::midpoint(p, q));
        let (over, under) = if convex { (sec, tan) } else { (tan, sec) };
        pieces.push(UnivariatePiece { lo: p.clone(), hi: q.clone(), over, under });
    }
    pieces
}
