//! Counterexample filtering: decide whether a region contains a concrete
//! violation of the full query, or is an artifact of the linearization.
//!
//! Substituting the region's affine map for the output variables turns the
//! region-local satisfiability formula into a formula with at most `I` free
//! variables. Purely linear instances go to the exact LP (never `Unknown`);
//! polynomial ones go to interval propagation over the region's bounding
//! box. A `Concrete` verdict is re-verified end-to-end through the actual
//! network against the original, un-linearized query.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::formula::{Atom, Formula, QuerySpec, Relation, Term};
use crate::mosaic::NormalizedQuery;
use crate::network::{io_state, Network};
use crate::rat::{self, Rat};
use crate::reach::CexRegion;
use crate::stats::Counters;
use crate::theory::{
    icp_check, literal_dnf, lp_feasible, push_linear_constraint, Direction, Extremum, IcpBudget,
    IntervalBox, LinRel, PolyConstraint, SignedAtom, TheoryVerdict,
};

/// Verdict for one counterexample region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FilterOutcome {
    /// A genuine counterexample: `outputs = network(witness)` exactly, and
    /// the original query holds at (witness, outputs).
    Concrete { witness: Vec<Rat>, outputs: Vec<Rat> },
    Spurious,
    Unknown(String),
}

/// Budget for one region check.
#[derive(Clone, Debug)]
pub struct FilterBudget {
    pub icp: IcpBudget,
    /// Wall-clock limit per region.
    pub timeout: Duration,
}

impl Default for FilterBudget {
    fn default() -> Self {
        FilterBudget { icp: IcpBudget::default(), timeout: Duration::from_secs(4) }
    }
}

/// The region-local satisfiability formula over the inputs: the region's
/// half-spaces plus a DNF of substituted constraint conjunctions.
#[derive(Clone, Debug)]
pub struct Eta {
    pub iota: Vec<PolyConstraint>,
    /// Output-range constraints on the substituted affine map.
    pub range_rows: Vec<PolyConstraint>,
    pub branches: Vec<Vec<PolyConstraint>>,
}

impl Eta {
    /// All-linear instances dispatch to the LP.
    pub fn is_linear(&self) -> bool {
        self.branches
            .iter()
            .flatten()
            .chain(&self.iota)
            .chain(&self.range_rows)
            .all(|c| c.is_linear())
    }

    /// Formula view (for reporting and sampling checks).
    pub fn to_formula(&self) -> Formula {
        let atom = |c: &PolyConstraint| Formula::Atom(Atom::cmp(c.term.clone(), c.rel, Term::zero()));
        let mut parts: Vec<Formula> = self.iota.iter().map(atom).collect();
        parts.extend(self.range_rows.iter().map(atom));
        parts.push(Formula::or(
            self.branches
                .iter()
                .map(|b| Formula::and(b.iter().map(atom).collect()))
                .collect(),
        ));
        Formula::and(parts)
    }
}

/// The affine components of ω as polynomial terms over the input variables.
fn omega_terms(region: &CexRegion, inputs: &[String]) -> Vec<Term> {
    region
        .omega
        .matrix
        .iter()
        .zip(&region.omega.bias)
        .map(|(row, b)| {
            let mut t = Term::constant(b.clone());
            for (c, v) in row.iter().zip(inputs) {
                if !c.is_zero() {
                    t = t.add(&Term::var(v).scale(c));
                }
            }
            t
        })
        .collect()
}

use num_traits::Zero;

/// Build the region-local formula: every occurrence of an output variable
/// is replaced by the matching affine component of ω, the region's
/// half-spaces are conjoined, and approximation atoms are dropped (they are
/// implied by their exact atoms and only widen the search). The result has
/// free variables among the inputs only.
pub fn build_eta(q: &NormalizedQuery, region: &CexRegion, spec: &QuerySpec) -> Eta {
    let omega = omega_terms(region, &spec.inputs);
    let subs: BTreeMap<String, Term> = spec
        .outputs
        .iter()
        .cloned()
        .zip(omega.iter().cloned())
        .collect();
    let substitute = |cs: Vec<PolyConstraint>| -> Vec<PolyConstraint> {
        cs.into_iter()
            .map(|c| PolyConstraint::new(c.term.substitute(&subs), c.rel))
            .collect()
    };
    let drop_approx = |lits: &[SignedAtom]| -> Vec<SignedAtom> {
        lits.iter()
            .filter(|(a, _)| !q.approx_atoms.contains(a))
            .cloned()
            .collect()
    };

    // ι rows as linear constraints over the inputs.
    let iota = region
        .iota
        .rows
        .iter()
        .map(|row| {
            let mut term = Term::constant(-row.rhs.clone());
            for (c, v) in row.coeffs.iter().zip(&region.iota.vars) {
                if !c.is_zero() {
                    term = term.add(&Term::var(v).scale(c));
                }
            }
            let rel = match row.rel {
                LinRel::Le => Relation::Le,
                LinRel::Lt => Relation::Lt,
                LinRel::Eq => Relation::Eq,
            };
            PolyConstraint::new(term, rel)
        })
        .collect();

    // Output ranges on ω(z).
    let mut range_rows = Vec::new();
    for (out, w) in spec.outputs.iter().zip(&omega) {
        let (lo, hi) = spec.ranges.get(out).expect("validated ranges");
        range_rows.push(PolyConstraint::new(
            w.sub(&Term::constant(hi.clone())),
            Relation::Le,
        ));
        range_rows.push(PolyConstraint::new(
            w.sub(&Term::constant(lo.clone())),
            Relation::Ge,
        ));
    }

    // DNF over (output conjunction) × (exact-side conjunction), with
    // disequality and argmax expansion, outputs substituted away.
    let mut branches = Vec::new();
    for out_conj in &q.output_dnf {
        let out_lits = drop_approx(&out_conj.literals);
        for nl_conj in &q.nonlinear_dnf {
            let nl_lits = drop_approx(nl_conj);
            let mut combined = out_lits.clone();
            for lit in &nl_lits {
                if !combined.contains(lit) {
                    combined.push(lit.clone());
                }
            }
            for branch in literal_dnf(&combined, &spec.outputs) {
                let constraints = substitute(branch);
                if !branches.contains(&constraints) {
                    branches.push(constraints);
                }
            }
        }
    }
    Eta { iota, range_rows, branches }
}

/// Exact bounding box of the region: the input ranges tightened by LP over
/// the region's polytope.
fn region_box(region: &CexRegion, spec: &QuerySpec, counters: &Counters) -> Option<IntervalBox> {
    let vars = region.iota.vars.clone();
    let mut lo = Vec::with_capacity(vars.len());
    let mut hi = Vec::with_capacity(vars.len());
    // Conjoin the declared input ranges so the box stays bounded even for
    // generalized cells that extend past them.
    let mut sys = region.iota.clone();
    for (i, v) in vars.iter().enumerate() {
        let (l, h) = spec.ranges.get(v).expect("validated ranges");
        let mut up = vec![rat::zero(); vars.len()];
        up[i] = rat::one();
        sys.push(up.clone(), LinRel::Le, h.clone());
        for c in up.iter_mut() {
            *c = -c.clone();
        }
        sys.push(up, LinRel::Le, -l.clone());
    }
    for i in 0..vars.len() {
        let mut obj = vec![rat::zero(); vars.len()];
        obj[i] = rat::one();
        let lo_i = match crate::theory::lp_extremum(&obj, &sys, Direction::Min, counters) {
            Ok(Extremum::Value { value, .. }) => value,
            Ok(Extremum::Unbounded) => unreachable!("range rows bound the box"),
            Err(_) => return None,
        };
        let hi_i = match crate::theory::lp_extremum(&obj, &sys, Direction::Max, counters) {
            Ok(Extremum::Value { value, .. }) => value,
            Ok(Extremum::Unbounded) => unreachable!("range rows bound the box"),
            Err(_) => return None,
        };
        lo.push(lo_i);
        hi.push(hi_i);
    }
    Some(IntervalBox::new(vars, lo, hi))
}

/// Decide a counterexample region against the full query.
pub fn check(
    net: &Network,
    q: &NormalizedQuery,
    region: &CexRegion,
    spec: &QuerySpec,
    budget: &FilterBudget,
    counters: &Counters,
) -> FilterOutcome {
    let eta = build_eta(q, region, spec);
    let deadline = Instant::now() + budget.timeout;
    let Some(b) = region_box(region, spec, counters) else {
        // Empty region polytope: nothing to refute.
        return FilterOutcome::Spurious;
    };
    let mut unknown: Option<String> = None;
    for branch in &eta.branches {
        let constraints: Vec<PolyConstraint> = eta
            .iota
            .iter()
            .chain(&eta.range_rows)
            .chain(branch)
            .cloned()
            .collect();
        let verdict = if constraints.iter().all(|c| c.is_linear()) {
            // Exact LP path; never Unknown.
            let mut sys = b.to_linsystem();
            for c in &constraints {
                push_linear_constraint(&mut sys, c);
            }
            lp_feasible(&sys, counters)
        } else {
            let icp_budget = IcpBudget {
                deadline: Some(deadline),
                ..budget.icp.clone()
            };
            icp_check(&constraints, &b, &icp_budget, counters).verdict
        };
        match verdict {
            TheoryVerdict::Sat(assignment) => {
                let witness: Vec<Rat> =
                    spec.inputs.iter().map(|v| assignment[&v as &str].clone()).collect();
                let outputs = net.evaluate(&witness);
                // Close the loop: the witness must violate the original,
                // un-linearized query through the real network.
                let state = io_state(&spec.inputs, &witness, &spec.outputs, &outputs);
                let goal = spec.goal_formula();
                assert!(
                    goal.eval(&state, &spec.outputs).unwrap_or(false),
                    "internal error: filter witness fails the original query"
                );
                return FilterOutcome::Concrete { witness, outputs };
            }
            TheoryVerdict::Unsat => {}
            TheoryVerdict::Unknown(reason) => {
                unknown.get_or_insert(reason);
            }
        }
    }
    match unknown {
        Some(reason) => FilterOutcome::Unknown(reason),
        None => FilterOutcome::Spurious,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::linearize::augment;
    use crate::mosaic::{decompose, MosaicConfig};
    use crate::network::load_network;
    use crate::rat::{frac, int};
    use crate::reach::enumerate_regions;
    use crate::stats::Counters;

    fn counters() -> Counters {
        Counters::new()
    }

    fn pipeline_with(
        text: &str,
        net_json: &[u8],
        approx: &crate::linearize::ApproxConfig,
    ) -> (QuerySpec, Network, Vec<NormalizedQuery>) {
        let spec = parse(text).unwrap();
        let net = load_network(net_json).unwrap();
        let goal = spec.goal_formula();
        let aug = augment(&goal, &spec.ranges, approx);
        let d = decompose(
            &aug.formula,
            &spec,
            &aug.approx_atoms,
            &MosaicConfig::default(),
            &counters(),
        );
        (spec, net, d.queries)
    }

    fn pipeline(text: &str, net_json: &[u8]) -> (QuerySpec, Network, Vec<NormalizedQuery>) {
        pipeline_with(text, net_json, &Default::default())
    }

    const IDENTITY: &[u8] =
        br#"{"layers":[{"weights":[[1]],"bias":[0],"activation":"linear"}]}"#;

    #[test]
    fn eta_substitution_example() {
        // y >= z^2 with identity network on z ∈ [0,1]:
        // η per region is 0 <= z <= 1 ∧ z >= z^2, concrete at z = 1/2.
        let (spec, net, qs) =
            pipeline("inputs: z [0,1]; outputs: y [-2,2]; falsify: y >= z^2", IDENTITY);
        let c = counters();
        let mut found_concrete = false;
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            for region in &regions {
                let eta = build_eta(q, region, &spec);
                // Substitution leaves input variables only.
                for constraint in eta.branches.iter().flatten() {
                    assert!(constraint.term.vars().iter().all(|v| v == "z"));
                }
                match check(&net, q, region, &spec, &FilterBudget::default(), &c) {
                    FilterOutcome::Concrete { witness, outputs } => {
                        found_concrete = true;
                        assert_eq!(outputs, net.evaluate(&witness));
                        // witness satisfies y >= z^2 with y = z.
                        assert!(&witness[0] >= &(&witness[0] * &witness[0]));
                    }
                    FilterOutcome::Spurious => {}
                    FilterOutcome::Unknown(r) => panic!("unexpected unknown: {}", r),
                }
            }
        }
        assert!(found_concrete);
    }

    #[test]
    fn spurious_region_detected() {
        // y < z^2 - 1 on z ∈ [0,1] with identity network: unsatisfiable
        // (z < z^2 - 1 has no roots in [0,1]). With the deliberately
        // vacuous interval approximation, reachability still emits a
        // candidate region, which the filter must reject.
        let cfg = crate::linearize::ApproxConfig {
            mode: crate::linearize::ApproxMode::Interval,
            ..Default::default()
        };
        let (spec, net, qs) = pipeline_with(
            "inputs: z [0,1]; outputs: y [-2,2]; falsify: y < z^2 - 1",
            IDENTITY,
            &cfg,
        );
        let c = counters();
        let mut saw_region = false;
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            for region in &regions {
                saw_region = true;
                assert_eq!(
                    check(&net, q, region, &spec, &FilterBudget::default(), &c),
                    FilterOutcome::Spurious
                );
            }
        }
        assert!(saw_region, "interval mode must leave a candidate region");
    }

    #[test]
    fn linear_eta_skips_icp() {
        let (spec, net, qs) =
            pipeline("inputs: z [0,1]; outputs: y [-2,2]; falsify: y > 1/2", IDENTITY);
        let c = counters();
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            let before = crate::stats::Counters::get(&c.icp_calls);
            for region in &regions {
                let out = check(&net, q, region, &spec, &FilterBudget::default(), &c);
                assert!(matches!(out, FilterOutcome::Concrete { .. }));
            }
            let after = crate::stats::Counters::get(&c.icp_calls);
            assert_eq!(before, after, "all-linear η must dispatch to the LP");
        }
    }

    #[test]
    fn spurious_soundness_grid() {
        // Wherever Spurious is returned, a dense grid of ι finds no point
        // satisfying the query through the network.
        let (spec, net, qs) = pipeline(
            "inputs: z [-2,2]; outputs: y [-8,8]; falsify: y < z^2 - 1 & y > -1/2",
            br#"{"layers":[
                {"weights":[[1],[-1]],"bias":[0,0],"activation":"relu"},
                {"weights":[[1,1]],"bias":[0],"activation":"linear"}
            ]}"#,
        );
        let c = counters();
        let goal = spec.goal_formula();
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            for region in &regions {
                if check(&net, q, region, &spec, &FilterBudget::default(), &c)
                    == FilterOutcome::Spurious
                {
                    for i in 0..=100 {
                        let z = frac(-200 + 4 * i, 100);
                        if !region.iota.contains(&[z.clone()]) {
                            continue;
                        }
                        let out = net.evaluate(&[z.clone()]);
                        let state =
                            io_state(&spec.inputs, &[z.clone()], &spec.outputs, &out);
                        assert!(
                            !goal.eval(&state, &spec.outputs).unwrap(),
                            "spurious region contains counterexample at z={}",
                            rat::display(&z)
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn argmax_eta_substitutes_pairwise() {
        // Two outputs; argmax_out = 0 through a linear net.
        let (spec, net, qs) = pipeline(
            "inputs: z [0,1]; outputs: y0 [-4,4], y1 [-4,4]; falsify: argmax_out = 0",
            br#"{"layers":[{"weights":[[1],[-1]],"bias":[0,0],"activation":"linear"}]}"#,
        );
        let c = counters();
        let mut concrete = 0;
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            for region in &regions {
                let eta = build_eta(q, region, &spec);
                for constraint in eta.branches.iter().flatten() {
                    assert!(constraint.is_linear());
                    assert!(constraint.term.vars().iter().all(|v| v == "z"));
                }
                if let FilterOutcome::Concrete { witness, outputs } =
                    check(&net, q, region, &spec, &FilterBudget::default(), &c)
                {
                    assert!(outputs[0] >= outputs[1]);
                    assert_eq!(outputs, net.evaluate(&witness));
                    concrete += 1;
                }
            }
        }
        // z with z >= -z, i.e. z >= 0: the whole range; must be found.
        assert!(concrete >= 1);
    }

    #[test]
    fn concrete_witness_is_exact_boundary() {
        // 2*100*r >= rv^2 boundary case through a constant network.
        let (spec, net, qs) = pipeline(
            "inputs: r [0,100], rv [-200,200]; outputs: a [-100,100]; \
             falsify: r > 0 & 2*100*r >= rv^2 & a = -100",
            br#"{"layers":[{"weights":[[0,0]],"bias":[-100],"activation":"linear"}]}"#,
        );
        let c = counters();
        let mut concrete = false;
        for q in &qs {
            let (regions, _) = enumerate_regions(&net, q, &c);
            for region in &regions {
                if let FilterOutcome::Concrete { witness, .. } =
                    check(&net, q, region, &spec, &FilterBudget::default(), &c)
                {
                    concrete = true;
                    // Exactly verify the invariant atom at the witness.
                    let lhs = int(200) * &witness[0];
                    let rhs = &witness[1] * &witness[1];
                    assert!(lhs >= rhs);
                }
            }
        }
        assert!(concrete);
    }
}
