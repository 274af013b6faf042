//! Exact rational linear programming.
//!
//! A dense two-phase simplex over `BigRational` with Bland's pivoting rule
//! (anti-cycling, so termination is unconditional). Free variables are split
//! into differences of non-negative variables. Strict inequalities are
//! decided exactly by a second phase that maximizes a shared slack: the
//! closure is solved first, then strictness is certified by showing the
//! slack optimum is positive.

use num_traits::Zero;

use crate::rat::{self, Rat};
use crate::stats::Counters;

use super::linsys::{dot, LinRel, LinSystem, TheoryVerdict};

/// Outcome of an extremum computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Extremum {
    Unbounded,
    Value { value: Rat, witness: Vec<Rat> },
}

/// Optimization direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

/// Error for extremum queries on infeasible systems.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("infeasible input system")]
pub struct InfeasibleInput;

// ---------------------------------------------------------------------------
// Canonical-form solver: min c·y  s.t.  A y {<=,=} b,  y >= 0.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq)]
enum CanonRel {
    Le,
    Eq,
}

struct Canon {
    ncols: usize,
    rows: Vec<(Vec<Rat>, CanonRel, Rat)>,
    minimize: Vec<Rat>,
}

enum CanonOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Rat, point: Vec<Rat> },
}

struct Tableau {
    // rows[r][0..total] coefficients, rows[r][total] = rhs
    rows: Vec<Vec<Rat>>,
    cost: Vec<Rat>,
    basis: Vec<usize>,
    total: usize,
    banned: Vec<bool>,
    pivots: u64,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        let inv = {
            let p = &self.rows[r][c];
            debug_assert!(!p.is_zero());
            rat::one() / p.clone()
        };
        for x in self.rows[r].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let factor = row[c].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                *x -= &factor * p;
            }
        }
        if !self.cost[c].is_zero() {
            let factor = self.cost[c].clone();
            for (x, p) in self.cost.iter_mut().zip(&pivot_row) {
                *x -= &factor * p;
            }
        }
        self.basis[r] = c;
    }

    /// Bland's rule iteration until optimality or unboundedness.
    fn optimize(&mut self) -> bool {
        loop {
            // Entering: smallest index with a negative reduced cost.
            let entering = (0..self.total)
                .find(|&j| !self.banned[j] && self.cost[j] < rat::zero());
            let Some(j) = entering else {
                return true; // optimal
            };
            // Leaving: min ratio; ties broken by smallest basic variable.
            let mut best: Option<(usize, Rat)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][j];
                if a <= &rat::zero() {
                    continue;
                }
                let ratio = &self.rows[r][self.total] / a;
                match &best {
                    None => best = Some((r, ratio)),
                    Some((br, bratio)) => {
                        if ratio < *bratio
                            || (ratio == *bratio && self.basis[r] < self.basis[*br])
                        {
                            best = Some((r, ratio));
                        }
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, j),
                None => return false, // unbounded
            }
        }
    }

    fn point(&self, ncols: usize) -> Vec<Rat> {
        let mut out = vec![rat::zero(); ncols];
        for (r, &b) in self.basis.iter().enumerate() {
            if b < ncols {
                out[b] = self.rows[r][self.total].clone();
            }
        }
        out
    }
}

fn solve_canonical(lp: &Canon, counters: &Counters) -> CanonOutcome {
    Counters::bump(&counters.lp_calls);
    let m = lp.rows.len();
    let nslack = lp.rows.iter().filter(|(_, rel, _)| *rel == CanonRel::Le).count();
    // Artificial variables only where the slack cannot serve as the initial
    // basis: equality rows and rows with a negative right-hand side.
    let needs_artificial: Vec<bool> = lp
        .rows
        .iter()
        .map(|(_, rel, rhs)| *rel == CanonRel::Eq || rhs < &rat::zero())
        .collect();
    let nart = needs_artificial.iter().filter(|b| **b).count();
    let art_start = lp.ncols + nslack;
    let total = art_start + nart;
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut slack_idx = lp.ncols;
    let mut art_idx = art_start;
    for (i, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
        let mut row = vec![rat::zero(); total + 1];
        row[..lp.ncols].clone_from_slice(coeffs);
        if *rel == CanonRel::Le {
            row[slack_idx] = rat::one();
            slack_idx += 1;
        }
        row[total] = rhs.clone();
        if row[total] < rat::zero() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        if needs_artificial[i] {
            row[art_idx] = rat::one();
            basis.push(art_idx);
            art_idx += 1;
        } else {
            // The slack column written above is the basic variable.
            basis.push(slack_idx - 1);
        }
        rows.push(row);
    }

    let mut t = Tableau {
        rows,
        cost: vec![rat::zero(); total + 1],
        basis,
        total,
        banned: vec![false; total],
        pivots: 0,
    };
    if nart > 0 {
        // Phase 1: minimize the sum of artificials. Reduced costs start as
        // the negated column sums over artificial-basis rows.
        let mut cost = vec![rat::zero(); total + 1];
        for j in 0..=total {
            if j >= art_start && j < total {
                continue; // artificial columns price out to zero
            }
            let mut s = rat::zero();
            for (r, row) in t.rows.iter().enumerate() {
                if t.basis[r] >= art_start {
                    s += &row[j];
                }
            }
            cost[j] = -s;
        }
        t.cost = cost;
        t.optimize();
        let phase1 = -t.cost[total].clone();
        if phase1 > rat::zero() {
            Counters::add(&counters.lp_pivots, t.pivots);
            return CanonOutcome::Infeasible;
        }
        // Drive basic artificials out; delete redundant rows.
        let mut r = 0;
        while r < t.rows.len() {
            if t.basis[r] >= art_start {
                let col = (0..art_start).find(|&j| !t.rows[r][j].is_zero());
                match col {
                    Some(j) => t.pivot(r, j),
                    None => {
                        t.rows.remove(r);
                        t.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        for j in art_start..total {
            t.banned[j] = true;
        }
    }

    // Phase 2: swap in the real objective and price out the basis.
    let mut cost = vec![rat::zero(); total + 1];
    cost[..lp.ncols].clone_from_slice(&lp.minimize);
    for (r, &b) in t.basis.iter().enumerate() {
        if !cost[b].is_zero() {
            let factor = cost[b].clone();
            let row = t.rows[r].clone();
            for (x, p) in cost.iter_mut().zip(&row) {
                *x -= &factor * p;
            }
        }
    }
    t.cost = cost;
    let bounded = t.optimize();
    Counters::add(&counters.lp_pivots, t.pivots);
    if !bounded {
        return CanonOutcome::Unbounded;
    }
    let point = t.point(lp.ncols);
    let value = dot(&lp.minimize, &point);
    CanonOutcome::Optimal { value, point }
}

// ---------------------------------------------------------------------------
// Free-variable layer.
// ---------------------------------------------------------------------------

/// Encoder from a [`LinSystem`] over free variables into canonical form.
/// Column `2i` is the positive part of variable `i`, column `2i+1` the
/// negative part; one optional extra non-negative column follows.
struct FreeEncoding {
    nvars: usize,
    extra: bool,
}

impl FreeEncoding {
    fn ncols(&self) -> usize {
        2 * self.nvars + usize::from(self.extra)
    }

    fn encode_row(&self, coeffs: &[Rat], extra_coeff: Rat) -> Vec<Rat> {
        let mut row = vec![rat::zero(); self.ncols()];
        for (i, c) in coeffs.iter().enumerate() {
            row[2 * i] = c.clone();
            row[2 * i + 1] = -c.clone();
        }
        if self.extra {
            row[2 * self.nvars] = extra_coeff;
        }
        row
    }

    fn decode(&self, point: &[Rat]) -> Vec<Rat> {
        (0..self.nvars)
            .map(|i| &point[2 * i] - &point[2 * i + 1])
            .collect()
    }

    fn extra_value(&self, point: &[Rat]) -> Rat {
        point[2 * self.nvars].clone()
    }
}

struct FreeLp {
    enc: FreeEncoding,
    canon: Canon,
}

impl FreeLp {
    /// Build the closure (strict rows relaxed) of `sys`, optionally with a
    /// shared strictness slack added to every strict row.
    fn closure(sys: &LinSystem, with_slack: bool) -> FreeLp {
        let enc = FreeEncoding { nvars: sys.num_vars(), extra: with_slack };
        let mut rows = Vec::with_capacity(sys.rows.len());
        for row in &sys.rows {
            let strict = row.rel == LinRel::Lt;
            let slack_coeff = if strict && with_slack { rat::one() } else { rat::zero() };
            let rel = match row.rel {
                LinRel::Eq => CanonRel::Eq,
                LinRel::Le | LinRel::Lt => CanonRel::Le,
            };
            rows.push((enc.encode_row(&row.coeffs, slack_coeff), rel, row.rhs.clone()));
        }
        if with_slack {
            // delta <= 1 keeps the slack objective bounded.
            let mut cap = vec![rat::zero(); enc.ncols()];
            cap[2 * enc.nvars] = rat::one();
            rows.push((cap, CanonRel::Le, rat::one()));
        }
        let ncols = enc.ncols();
        FreeLp {
            enc,
            canon: Canon { ncols, rows, minimize: vec![rat::zero(); ncols] },
        }
    }

    fn set_objective(&mut self, coeffs: &[Rat], extra: Rat) {
        self.canon.minimize = self.enc.encode_row(coeffs, extra);
    }

    fn fix_var(&mut self, var: usize, value: Rat) {
        let mut coeffs = vec![rat::zero(); self.enc.nvars];
        coeffs[var] = rat::one();
        let row = self.enc.encode_row(&coeffs, rat::zero());
        self.canon.rows.push((row, CanonRel::Eq, value));
    }
}

/// Decide feasibility of a linear system with mixed strict and non-strict
/// rows. The verdict is exact: `Sat` carries a substitution-checked witness
/// (the lexicographically smallest value vector over the decided face),
/// `Unsat` means no rational solution exists. Never returns `Unknown`.
pub fn lp_feasible(sys: &LinSystem, counters: &Counters) -> TheoryVerdict {
    feasible_impl(sys, counters, true)
}

/// Like [`lp_feasible`] but the witness is the (still deterministic) basic
/// solution of the final simplex run rather than the lexicographic minimum.
/// Used on hot paths where the witness only seeds probing.
pub fn lp_feasible_fast(sys: &LinSystem, counters: &Counters) -> TheoryVerdict {
    feasible_impl(sys, counters, false)
}

fn feasible_impl(sys: &LinSystem, counters: &Counters, lex: bool) -> TheoryVerdict {
    if sys.num_vars() == 0 {
        let ok = sys
            .rows
            .iter()
            .all(|r| r.rel.holds(&rat::zero(), &r.rhs));
        return if ok {
            TheoryVerdict::Sat(Default::default())
        } else {
            TheoryVerdict::Unsat
        };
    }
    let has_strict = sys.rows.iter().any(|r| r.rel == LinRel::Lt);
    let mut lp = FreeLp::closure(sys, has_strict);
    #[allow(unused_assignments)]
    let mut witness: Option<Vec<Rat>> = None;
    if has_strict {
        // Maximize the shared strictness slack; a zero optimum certifies
        // that the strict system has no interior point.
        let zeros = vec![rat::zero(); sys.num_vars()];
        lp.set_objective(&zeros, -rat::one());
        match solve_canonical(&lp.canon, counters) {
            CanonOutcome::Infeasible => return TheoryVerdict::Unsat,
            CanonOutcome::Unbounded => unreachable!("slack is capped"),
            CanonOutcome::Optimal { value, point } => {
                let delta = lp.enc.extra_value(&point);
                debug_assert_eq!(-value, delta);
                if delta.is_zero() {
                    return TheoryVerdict::Unsat;
                }
                witness = Some(lp.enc.decode(&point));
                lp.fix_var_extra(delta);
            }
        }
    } else {
        let zeros = vec![rat::zero(); sys.num_vars()];
        lp.set_objective(&zeros, rat::zero());
        match solve_canonical(&lp.canon, counters) {
            CanonOutcome::Infeasible => return TheoryVerdict::Unsat,
            CanonOutcome::Optimal { point, .. } => witness = Some(lp.enc.decode(&point)),
            CanonOutcome::Unbounded => unreachable!("zero objective"),
        }
    }
    let witness = if lex {
        lex_min_point(&mut lp, counters)
    } else {
        witness.expect("feasible solve yields a point")
    };
    assert!(
        sys.contains(&witness),
        "internal error: LP witness fails substitution check"
    );
    TheoryVerdict::Sat(sys.assignment(&witness))
}

impl FreeLp {
    fn fix_var_extra(&mut self, value: Rat) {
        let coeffs = vec![rat::zero(); self.enc.nvars];
        let row = self.enc.encode_row(&coeffs, rat::one());
        self.canon.rows.push((row, CanonRel::Eq, value));
    }
}

/// Sequentially minimize each coordinate over the remaining feasible face.
/// Coordinates along which the face is unbounded keep the value of the
/// current feasible point, so the result is still deterministic.
fn lex_min_point(lp: &mut FreeLp, counters: &Counters) -> Vec<Rat> {
    let n = lp.enc.nvars;
    let mut witness = vec![rat::zero(); n];
    for i in 0..n {
        let mut obj = vec![rat::zero(); n];
        obj[i] = rat::one();
        lp.set_objective(&obj, rat::zero());
        match solve_canonical(&lp.canon, counters) {
            CanonOutcome::Optimal { point, .. } => {
                let decoded = lp.enc.decode(&point);
                witness[i] = decoded[i].clone();
            }
            CanonOutcome::Unbounded => {
                // Any feasible value works; reuse the basic solution of a
                // pure feasibility solve for determinism.
                let zeros = vec![rat::zero(); n];
                lp.set_objective(&zeros, rat::zero());
                match solve_canonical(&lp.canon, counters) {
                    CanonOutcome::Optimal { point, .. } => {
                        let decoded = lp.enc.decode(&point);
                        witness[i] = decoded[i].clone();
                    }
                    _ => unreachable!("face known feasible"),
                }
            }
            CanonOutcome::Infeasible => unreachable!("face known feasible"),
        }
        lp.fix_var(i, witness[i].clone());
    }
    witness
}

/// Exact optimum of a linear objective over the closure of the feasible set.
pub fn lp_extremum(
    objective: &[Rat],
    sys: &LinSystem,
    direction: Direction,
    counters: &Counters,
) -> Result<Extremum, InfeasibleInput> {
    assert_eq!(objective.len(), sys.num_vars());
    if sys.num_vars() == 0 {
        let feasible = sys.rows.iter().all(|r| {
            let rel = if r.rel == LinRel::Lt { LinRel::Le } else { r.rel };
            rel.holds(&rat::zero(), &r.rhs)
        });
        return if feasible {
            Ok(Extremum::Value { value: rat::zero(), witness: vec![] })
        } else {
            Err(InfeasibleInput)
        };
    }
    let mut lp = FreeLp::closure(sys, false);
    let minimize: Vec<Rat> = match direction {
        Direction::Min => objective.to_vec(),
        Direction::Max => objective.iter().map(|c| -c.clone()).collect(),
    };
    lp.set_objective(&minimize, rat::zero());
    match solve_canonical(&lp.canon, counters) {
        CanonOutcome::Infeasible => Err(InfeasibleInput),
        CanonOutcome::Unbounded => Ok(Extremum::Unbounded),
        CanonOutcome::Optimal { point, .. } => {
            let witness = lp.enc.decode(&point);
            let value = dot(objective, &witness);
            Ok(Extremum::Value { value, witness })
        }
    }
}

/// Convenience: exact `[min, max]` of a linear functional over the closure.
/// `None` marks an unbounded direction.
pub fn lp_row_bounds(
    coeffs: &[Rat],
    constant: &Rat,
    sys: &LinSystem,
    counters: &Counters,
) -> Result<(Option<Rat>, Option<Rat>), InfeasibleInput> {
    let lo = match lp_extremum(coeffs, sys, Direction::Min, counters)? {
        Extremum::Unbounded => None,
        Extremum::Value { value, .. } => Some(value + constant),
    };
    let hi = match lp_extremum(coeffs, sys, Direction::Max, counters)? {
        Extremum::Unbounded => None,
        Extremum::Value { value, .. } => Some(value + constant),
    };
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{frac, int};
    use crate::theory::linsys::LinRel;

    fn counters() -> Counters {
        Counters::new()
    }

    fn sys1(rows: Vec<(Vec<i64>, LinRel, i64)>) -> LinSystem {
        let nvars = rows.first().map(|(c, _, _)| c.len()).unwrap_or(0);
        let vars: Vec<String> = (0..nvars).map(|i| format!("x{}", i)).collect();
        let mut sys = LinSystem::new(vars);
        for (coeffs, rel, rhs) in rows {
            sys.push(coeffs.into_iter().map(int).collect(), rel, int(rhs));
        }
        sys
    }

    #[test]
    fn contradictory_bounds_unsat() {
        // x <= 1, x >= 2 (written -x <= -2)
        let sys = sys1(vec![
            (vec![1], LinRel::Le, 1),
            (vec![-1], LinRel::Le, -2),
        ]);
        assert_eq!(lp_feasible(&sys, &counters()), TheoryVerdict::Unsat);
    }

    #[test]
    fn simplex_feasible_with_witness() {
        // x + y <= 1, x >= 0, y >= 0
        let sys = sys1(vec![
            (vec![1, 1], LinRel::Le, 1),
            (vec![-1, 0], LinRel::Le, 0),
            (vec![0, -1], LinRel::Le, 0),
        ]);
        match lp_feasible(&sys, &counters()) {
            TheoryVerdict::Sat(w) => {
                // Lexicographically smallest solution is the origin.
                assert_eq!(w["x0"], int(0));
                assert_eq!(w["x1"], int(0));
            }
            other => panic!("expected Sat, got {:?}", other),
        }
    }

    #[test]
    fn strict_boundary_cases() {
        // x < 1 and x > 1 is unsat; x < 1 and x >= 1 relaxation too.
        let sys = sys1(vec![
            (vec![1], LinRel::Lt, 1),
            (vec![-1], LinRel::Lt, -1),
        ]);
        assert_eq!(lp_feasible(&sys, &counters()), TheoryVerdict::Unsat);
        // x < 1, x > 0 has interior.
        let sys = sys1(vec![
            (vec![1], LinRel::Lt, 1),
            (vec![-1], LinRel::Lt, 0),
        ]);
        match lp_feasible(&sys, &counters()) {
            TheoryVerdict::Sat(w) => {
                assert!(w["x0"] > int(0) && w["x0"] < int(1));
            }
            other => panic!("expected Sat, got {:?}", other),
        }
        // Degenerate: x <= 0, x >= 0, x < 1 is sat only at the point 0.
        let sys = sys1(vec![
            (vec![1], LinRel::Le, 0),
            (vec![-1], LinRel::Le, 0),
            (vec![1], LinRel::Lt, 1),
        ]);
        match lp_feasible(&sys, &counters()) {
            TheoryVerdict::Sat(w) => assert_eq!(w["x0"], int(0)),
            other => panic!("expected Sat, got {:?}", other),
        }
        // Equality pinned on the strict boundary: x = 1 and x < 1.
        let sys = sys1(vec![
            (vec![1], LinRel::Eq, 1),
            (vec![1], LinRel::Lt, 1),
        ]);
        assert_eq!(lp_feasible(&sys, &counters()), TheoryVerdict::Unsat);
    }

    #[test]
    fn extremum_examples() {
        // max x over 0 <= x <= 1 is 1
        let sys = sys1(vec![
            (vec![1], LinRel::Le, 1),
            (vec![-1], LinRel::Le, 0),
        ]);
        match lp_extremum(&[int(1)], &sys, Direction::Max, &counters()).unwrap() {
            Extremum::Value { value, witness } => {
                assert_eq!(value, int(1));
                assert_eq!(witness, vec![int(1)]);
            }
            other => panic!("expected value, got {:?}", other),
        }
        // max x+y over x <= 1, y <= 1 is 2
        let sys = sys1(vec![
            (vec![1, 0], LinRel::Le, 1),
            (vec![0, 1], LinRel::Le, 1),
        ]);
        match lp_extremum(&[int(1), int(1)], &sys, Direction::Max, &counters()).unwrap() {
            Extremum::Value { value, .. } => assert_eq!(value, int(2)),
            other => panic!("expected value, got {:?}", other),
        }
        // Unbounded and infeasible cases.
        let sys = sys1(vec![(vec![-1], LinRel::Le, 0)]);
        assert_eq!(
            lp_extremum(&[int(1)], &sys, Direction::Max, &counters()).unwrap(),
            Extremum::Unbounded
        );
        let sys = sys1(vec![
            (vec![1], LinRel::Le, 0),
            (vec![-1], LinRel::Le, -1),
        ]);
        assert_eq!(
            lp_extremum(&[int(1)], &sys, Direction::Max, &counters()),
            Err(InfeasibleInput)
        );
    }

    #[test]
    fn fractional_optimum_is_exact() {
        // max x subject to 3x <= 1 gives exactly 1/3.
        let sys = sys1(vec![(vec![3], LinRel::Le, 1)]);
        match lp_extremum(&[int(1)], &sys, Direction::Max, &counters()).unwrap() {
            Extremum::Value { value, .. } => assert_eq!(value, frac(1, 3)),
            other => panic!("expected value, got {:?}", other),
        }
    }

    #[test]
    fn equality_rows() {
        // x + y = 1, x - y = 0 has the unique solution (1/2, 1/2).
        let sys = sys1(vec![
            (vec![1, 1], LinRel::Eq, 1),
            (vec![1, -1], LinRel::Eq, 0),
        ]);
        match lp_feasible(&sys, &counters()) {
            TheoryVerdict::Sat(w) => {
                assert_eq!(w["x0"], frac(1, 2));
                assert_eq!(w["x1"], frac(1, 2));
            }
            other => panic!("expected Sat, got {:?}", other),
        }
    }
}
