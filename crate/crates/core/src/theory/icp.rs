//! Interval constraint propagation: branch-and-prune satisfiability for
//! conjunctions of polynomial constraints over a box.
//!
//! `Sat` answers carry an exact rational witness checked by substitution.
//! `Unsat` answers are certified by a refutation tree whose leaves are
//! re-playable interval or LP refutations. `Unknown` is returned only when
//! the split budget, the box-size floor, or the deadline is hit.

use std::collections::BTreeMap;
use std::time::Instant;

use num_traits::Zero;

use crate::formula::{Relation, Term};
use crate::rat::{self, Rat};
use crate::stats::Counters;

use super::interval::{interval_eval, Interval};
use super::linsys::{IntervalBox, LinRel, LinSystem, TheoryVerdict};
use super::simplex::{lp_feasible, lp_feasible_fast};

/// A primitive polynomial constraint `term ⋈ 0` with `⋈ ∈ {<,<=,=,>=,>}`.
/// `!=` must be expanded into branches by the caller.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolyConstraint {
    pub term: Term,
    pub rel: Relation,
}

impl PolyConstraint {
    pub fn new(term: Term, rel: Relation) -> Self {
        assert!(rel != Relation::Ne, "expand != before theory checks");
        PolyConstraint { term, rel }
    }

    pub fn holds(&self, state: &BTreeMap<String, Rat>) -> Result<bool, String> {
        Ok(self.rel.holds(&self.term.eval(state)?))
    }

    pub fn is_linear(&self) -> bool {
        self.term.is_linear()
    }

    /// `true` when no point of the enclosure can satisfy the relation.
    fn refuted_by(&self, enclosure: &Interval) -> bool {
        let z = rat::zero();
        match self.rel {
            Relation::Lt => enclosure.lo >= z,
            Relation::Le => enclosure.lo > z,
            Relation::Eq => !enclosure.contains(&z),
            Relation::Ge => enclosure.hi < z,
            Relation::Gt => enclosure.hi <= z,
            Relation::Ne => unreachable!(),
        }
    }
}

/// Append a linear constraint to a system over the same variables.
pub fn push_linear_constraint(sys: &mut LinSystem, pc: &PolyConstraint) {
    match pc.rel {
        Relation::Le => sys.push_term(&pc.term, LinRel::Le),
        Relation::Lt => sys.push_term(&pc.term, LinRel::Lt),
        Relation::Eq => sys.push_term(&pc.term, LinRel::Eq),
        Relation::Ge => sys.push_term(&pc.term.neg(), LinRel::Le),
        Relation::Gt => sys.push_term(&pc.term.neg(), LinRel::Lt),
        Relation::Ne => unreachable!("expand != before theory checks"),
    }
}

/// Split budget and box-size floor for one `icp_check` call.
#[derive(Clone, Debug)]
pub struct IcpBudget {
    /// Maximum number of boxes explored.
    pub max_boxes: u64,
    /// Boxes stop splitting once every dimension shrinks below
    /// `initial_width / 2^floor_exp`.
    pub floor_exp: u32,
    /// Optional wall-clock deadline.
    pub deadline: Option<Instant>,
}

impl Default for IcpBudget {
    fn default() -> Self {
        IcpBudget { max_boxes: 100_000, floor_exp: 40, deadline: None }
    }
}

/// A re-playable certificate that a box contains no solution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RefutationNode {
    Leaf { lo: Vec<Rat>, hi: Vec<Rat>, reason: LeafReason },
    Split { dim: usize, at: Rat, left: Box<RefutationNode>, right: Box<RefutationNode> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeafReason {
    /// The enclosure of constraint `i` excludes its relation on this box.
    Interval(usize),
    /// The linear subset together with the box bounds is LP-infeasible.
    Lp,
}

/// Result of an ICP run.
#[derive(Debug)]
pub struct IcpOutcome {
    pub verdict: TheoryVerdict,
    pub refutation: Option<RefutationNode>,
    pub boxes: u64,
}

enum BoxResult {
    Refuted(RefutationNode),
    Sat(Vec<Rat>),
    Unknown(String),
}

struct Search<'a> {
    constraints: &'a [PolyConstraint],
    linear: Vec<usize>,
    budget: &'a IcpBudget,
    counters: &'a Counters,
    initial_width: Vec<Rat>,
    /// Normalized-width floor `2^-floor_exp`.
    floor: Rat,
    boxes: u64,
}

impl Search<'_> {
    fn out_of_budget(&self) -> Option<String> {
        if self.boxes >= self.budget.max_boxes {
            return Some(format!("split limit {} reached", self.budget.max_boxes));
        }
        if let Some(deadline) = self.budget.deadline {
            if Instant::now() >= deadline {
                return Some("deadline reached".to_string());
            }
        }
        None
    }

    fn probe(&self, b: &IntervalBox, point: &[Rat]) -> Option<Vec<Rat>> {
        if !b.contains(point) {
            return None;
        }
        let state = b
            .vars
            .iter()
            .cloned()
            .zip(point.iter().cloned())
            .collect::<BTreeMap<_, _>>();
        for c in self.constraints {
            if !c.holds(&state).ok()? {
                return None;
            }
        }
        Some(point.to_vec())
    }

    /// Linear subset of the constraints restricted to the box.
    fn linear_system(&self, b: &IntervalBox) -> LinSystem {
        let mut sys = b.to_linsystem();
        for &i in &self.linear {
            push_linear_constraint(&mut sys, &self.constraints[i]);
        }
        sys
    }

    fn explore(&mut self, b: &IntervalBox, inherited: Option<&[Rat]>) -> BoxResult {
        if let Some(reason) = self.out_of_budget() {
            return BoxResult::Unknown(reason);
        }
        self.boxes += 1;
        Counters::bump(&self.counters.icp_boxes);

        // Interval refutation test.
        for (i, c) in self.constraints.iter().enumerate() {
            let enclosure = interval_eval(&c.term, b);
            if c.refuted_by(&enclosure) {
                return BoxResult::Refuted(RefutationNode::Leaf {
                    lo: b.lo.clone(),
                    hi: b.hi.clone(),
                    reason: LeafReason::Interval(i),
                });
            }
        }

        // Probe the center, then a witness of the linear subset. The LP
        // witness lands exactly on linear equality hyperplanes, which the
        // midpoint stream would only approach. An inherited witness that
        // is still inside the box keeps satisfying the linear subset, so
        // the LP is re-solved only when the witness escapes.
        if let Some(w) = self.probe(b, &b.center()) {
            return BoxResult::Sat(w);
        }
        let mut lp_witness: Option<Vec<Rat>> = None;
        if !self.linear.is_empty() {
            match inherited {
                Some(w) if b.contains(w) => {
                    if let Some(w) = self.probe(b, w) {
                        return BoxResult::Sat(w);
                    }
                    lp_witness = Some(w.to_vec());
                }
                _ => {
                    let sys = self.linear_system(b);
                    match lp_feasible_fast(&sys, self.counters) {
                        TheoryVerdict::Unsat => {
                            return BoxResult::Refuted(RefutationNode::Leaf {
                                lo: b.lo.clone(),
                                hi: b.hi.clone(),
                                reason: LeafReason::Lp,
                            });
                        }
                        TheoryVerdict::Sat(assignment) => {
                            let point: Vec<Rat> =
                                b.vars.iter().map(|v| assignment[v].clone()).collect();
                            if let Some(w) = self.probe(b, &point) {
                                return BoxResult::Sat(w);
                            }
                            lp_witness = Some(point);
                        }
                        TheoryVerdict::Unknown(_) => unreachable!("LP is exact"),
                    }
                }
            }
        }

        // Branch on the widest normalized dimension.
        let Some(dim) = self.split_dimension(b) else {
            return BoxResult::Unknown("box-size floor reached".to_string());
        };
        let mid = rat::midpoint(&b.lo[dim], &b.hi[dim]);
        let mut left = b.clone();
        left.hi[dim] = mid.clone();
        let mut right = b.clone();
        right.lo[dim] = mid.clone();
        let w = lp_witness.as_deref();

        match self.explore(&left, w) {
            BoxResult::Sat(point) => BoxResult::Sat(point),
            BoxResult::Refuted(lref) => match self.explore(&right, w) {
                BoxResult::Sat(point) => BoxResult::Sat(point),
                BoxResult::Refuted(rref) => BoxResult::Refuted(RefutationNode::Split {
                    dim,
                    at: mid,
                    left: Box::new(lref),
                    right: Box::new(rref),
                }),
                BoxResult::Unknown(r) => BoxResult::Unknown(r),
            },
            BoxResult::Unknown(reason) => match self.explore(&right, w) {
                BoxResult::Sat(point) => BoxResult::Sat(point),
                _ => BoxResult::Unknown(reason),
            },
        }
    }

    /// Widest dimension relative to the initial widths; `None` when every
    /// dimension is below the floor.
    fn split_dimension(&self, b: &IntervalBox) -> Option<usize> {
        let mut best: Option<(usize, Rat)> = None;
        for i in 0..b.vars.len() {
            if self.initial_width[i].is_zero() {
                continue;
            }
            let normalized = b.width(i) / &self.initial_width[i];
            if normalized <= self.floor {
                continue;
            }
            match &best {
                None => best = Some((i, normalized)),
                Some((_, w)) if normalized > *w => best = Some((i, normalized)),
                _ => {}
            }
        }
        best.map(|(i, _)| i)
    }
}

/// Branch-and-prune satisfiability check for polynomial constraints over a
/// box. See the module documentation for the verdict contract.
pub fn icp_check(
    constraints: &[PolyConstraint],
    b: &IntervalBox,
    budget: &IcpBudget,
    counters: &Counters,
) -> IcpOutcome {
    Counters::bump(&counters.icp_calls);
    let linear: Vec<usize> = constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_linear())
        .map(|(i, _)| i)
        .collect();
    // Pure linear systems are decided by one exact LP call.
    let initial_width: Vec<Rat> = (0..b.vars.len()).map(|i| b.width(i)).collect();
    let mut search = Search {
        constraints,
        linear,
        budget,
        counters,
        initial_width,
        floor: rat::pow(&rat::frac(1, 2), budget.floor_exp),
        boxes: 0,
    };
    let result = if constraints.iter().all(|c| c.is_linear()) {
        let sys = search.linear_system(b);
        match lp_feasible_fast(&sys, counters) {
            TheoryVerdict::Sat(assignment) => {
                let point: Vec<Rat> = b.vars.iter().map(|v| assignment[v].clone()).collect();
                BoxResult::Sat(point)
            }
            TheoryVerdict::Unsat => BoxResult::Refuted(RefutationNode::Leaf {
                lo: b.lo.clone(),
                hi: b.hi.clone(),
                reason: LeafReason::Lp,
            }),
            TheoryVerdict::Unknown(_) => unreachable!("LP is exact"),
        }
    } else {
        search.explore(b, None)
    };
    let boxes = search.boxes;
    match result {
        BoxResult::Sat(point) => {
            let state: BTreeMap<String, Rat> =
                b.vars.iter().cloned().zip(point.iter().cloned()).collect();
            for c in constraints {
                assert!(
                    c.holds(&state).unwrap_or(false),
                    "internal error: ICP witness fails substitution check"
                );
            }
            IcpOutcome { verdict: TheoryVerdict::Sat(state), refutation: None, boxes }
        }
        BoxResult::Refuted(node) => IcpOutcome {
            verdict: TheoryVerdict::Unsat,
            refutation: Some(node),
            boxes,
        },
        BoxResult::Unknown(reason) => IcpOutcome {
            verdict: TheoryVerdict::Unknown(reason),
            refutation: None,
            boxes,
        },
    }
}

/// Re-play a refutation tree: confirms that the tree covers exactly the
/// given box and that every leaf's stated refutation holds.
pub fn verify_refutation(
    constraints: &[PolyConstraint],
    b: &IntervalBox,
    node: &RefutationNode,
    counters: &Counters,
) -> bool {
    match node {
        RefutationNode::Leaf { lo, hi, reason } => {
            if lo != &b.lo || hi != &b.hi {
                return false;
            }
            match reason {
                LeafReason::Interval(i) => match constraints.get(*i) {
                    Some(c) => c.refuted_by(&interval_eval(&c.term, b)),
                    None => false,
                },
                LeafReason::Lp => {
                    let mut sys = b.to_linsystem();
                    for c in constraints.iter().filter(|c| c.is_linear()) {
                        push_linear_constraint(&mut sys, c);
                    }
                    lp_feasible(&sys, counters).is_unsat()
                }
            }
        }
        RefutationNode::Split { dim, at, left, right } => {
            if *dim >= b.vars.len() || at < &b.lo[*dim] || at > &b.hi[*dim] {
                return false;
            }
            let mut lb = b.clone();
            lb.hi[*dim] = at.clone();
            let mut rb = b.clone();
            rb.lo[*dim] = at.clone();
            verify_refutation(constraints, &lb, left, counters)
                && verify_refutation(constraints, &rb, right, counters)
        }
    }
}
