//! Shared test utilities: fixture loading, sampling, the grid oracle and
//! the brute-force activation-pattern oracle.
//!
//! The pattern oracle decides a query by enumerating activation patterns
//! with its own forward-substitution of the network (independent of the
//! reachability engine), LP-checking every closed cell prefix, and deciding
//! the original un-linearized formula per cell via exact LP / interval
//! propagation. It never consults the linearization or mosaic stages.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use mosaic_core::driver::Verdict;
use mosaic_core::formula::{parse, Atom, Formula, QuerySpec};
use mosaic_core::network::{io_state, load_network, Activation, Network};
use mosaic_core::rat::{self, Rat};
use mosaic_core::stats::Counters;
use mosaic_core::theory::{
    icp_check, literal_dnf, lp_feasible_fast, push_linear_constraint, IcpBudget, IntervalBox,
    LinRel, LinSystem, SignedAtom, TheoryVerdict,
};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture_net(name: &str) -> Network {
    load_network(&std::fs::read(fixture_path(name)).expect("fixture net")).expect("valid net")
}

pub fn fixture_query(name: &str) -> QuerySpec {
    parse(&std::fs::read_to_string(fixture_path(name)).expect("fixture query"))
        .expect("valid query")
}

/// The bundled (network, query) pairs exercised by the acceptance suite.
pub fn fixture_registry() -> Vec<(&'static str, &'static str)> {
    vec![
        ("abs.json", "abs_gt_half.txt"),
        ("abs.json", "abs_gt_two.txt"),
        ("identity.json", "square_band.txt"),
        ("rand_1x4.json", "cubic_split.txt"),
        ("rand_2in_2out.json", "argmax_pick.txt"),
        ("acc_const_brake.json", "acc_monitor.txt"),
        ("acc_const_accel.json", "acc_monitor.txt"),
    ]
}

/// Deterministic state samples inside the declared ranges (inputs and
/// outputs drawn independently; for formula-level checks).
pub fn sample_states(
    spec: &QuerySpec,
    rng: &mut impl rand::Rng,
    n: usize,
) -> Vec<BTreeMap<String, Rat>> {
    (0..n)
        .map(|_| {
            spec.inputs
                .iter()
                .chain(&spec.outputs)
                .map(|v| {
                    let (lo, hi) = spec.ranges.get(v).expect("ranged");
                    let t = rat::frac(rng.gen_range(0..=4096), 4096);
                    (v.clone(), lo + (hi - lo) * t)
                })
                .collect()
        })
        .collect()
}

/// Grid of input points over the input ranges, `n` per dimension.
pub fn input_grid(spec: &QuerySpec, n: usize) -> Vec<Vec<Rat>> {
    let axes: Vec<Vec<Rat>> = spec
        .inputs
        .iter()
        .map(|v| {
            let (lo, hi) = spec.ranges.get(v).expect("ranged");
            (0..n)
                .map(|i| lo + (hi - lo) * rat::frac(i as i64, (n - 1).max(1) as i64))
                .collect()
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(points.len() * axis.len());
        for p in &points {
            for v in &axis {
                let mut q = p.clone();
                q.push(v.clone());
                next.push(q);
            }
        }
        points = next;
    }
    points
}

/// Is (z, g(z)) a counterexample: inside the ranges and satisfying the
/// goal formula exactly?
pub fn is_counterexample(spec: &QuerySpec, net: &Network, z: &[Rat]) -> bool {
    let outputs = net.evaluate(z);
    for (name, value) in spec.outputs.iter().zip(&outputs) {
        let (lo, hi) = spec.ranges.get(name).expect("ranged");
        if value < lo || value > hi {
            return false;
        }
    }
    let state = io_state(&spec.inputs, z, &spec.outputs, &outputs);
    spec.goal_formula()
        .eval(&state, &spec.outputs)
        .expect("total state")
}

/// All grid counterexamples.
pub fn grid_counterexamples(spec: &QuerySpec, net: &Network, n: usize) -> Vec<Vec<Rat>> {
    input_grid(spec, n)
        .into_iter()
        .filter(|z| is_counterexample(spec, net, z))
        .collect()
}

// ---------------------------------------------------------------------------
// Brute-force oracle.
// ---------------------------------------------------------------------------

/// Disjunctive normal form of a formula as signed-atom conjunctions
/// (plain distribution; oracle-sized formulas only).
pub fn formula_dnf(f: &Formula) -> Vec<Vec<SignedAtom>> {
    match f.nnf() {
        Formula::True => vec![vec![]],
        Formula::False => vec![],
        Formula::Atom(a) => vec![vec![(a, true)]],
        Formula::Not(inner) => match *inner {
            Formula::Atom(a) => vec![vec![(a, false)]],
            _ => unreachable!("nnf"),
        },
        Formula::And(parts) => {
            let mut acc: Vec<Vec<SignedAtom>> = vec![vec![]];
            for p in parts {
                let rhs = formula_dnf(&p);
                let mut next = Vec::new();
                for left in &acc {
                    for right in &rhs {
                        let mut conj = left.clone();
                        conj.extend(right.iter().cloned());
                        next.push(conj);
                    }
                }
                acc = next;
            }
            acc
        }
        Formula::Or(parts) => parts.iter().flat_map(formula_dnf).collect(),
        Formula::Implies(..) | Formula::Iff(..) => unreachable!("nnf"),
    }
}

/// Affine map of the network under a fixed prefix of neuron signs, built
/// by forward substitution (deliberately separate from the reachability
/// engine's composition).
struct OraclePrefix {
    /// Rows over the inputs for every layer value computed so far.
    matrix: Vec<Vec<Rat>>,
    bias: Vec<Rat>,
    cell: LinSystem,
    /// (layer, neuron) cursor.
    layer: usize,
    neuron: usize,
}

/// The oracle's verdict plus how it was reached.
#[derive(Debug, PartialEq, Eq, Clone, Copy)]
pub enum OracleVerdict {
    Safe,
    Unsafe,
    Unknown,
}

impl OracleVerdict {
    pub fn agrees_with(&self, v: Verdict) -> bool {
        matches!(
            (self, v),
            (OracleVerdict::Safe, Verdict::Safe) | (OracleVerdict::Unsafe, Verdict::Unsafe)
        )
    }

    pub fn is_unknown(&self) -> bool {
        *self == OracleVerdict::Unknown
    }
}

pub struct Oracle<'a> {
    spec: &'a QuerySpec,
    net: &'a Network,
    counters: &'a Counters,
    dnf: Vec<Vec<SignedAtom>>,
    ranges_sys: LinSystem,
    input_box_vars: Vec<String>,
    icp_budget: IcpBudget,
    unknown: bool,
    unsafe_found: bool,
}

/// Decide the query by full activation-pattern enumeration: every closed
/// pattern cell that intersects the input ranges is checked against the
/// original formula with the outputs substituted by the cell's affine map.
pub fn oracle_verdict(
    spec: &QuerySpec,
    net: &Network,
    icp_budget: &IcpBudget,
    counters: &Counters,
) -> OracleVerdict {
    let mut ranges_sys = LinSystem::new(spec.inputs.clone());
    for (i, v) in spec.inputs.iter().enumerate() {
        let (lo, hi) = spec.ranges.get(v).expect("ranged");
        let mut up = vec![rat::zero(); spec.inputs.len()];
        up[i] = rat::one();
        ranges_sys.push(up.clone(), LinRel::Le, hi.clone());
        for c in up.iter_mut() {
            *c = -c.clone();
        }
        ranges_sys.push(up, LinRel::Le, -lo.clone());
    }
    let mut oracle = Oracle {
        spec,
        net,
        counters,
        dnf: formula_dnf(&spec.goal_formula()),
        ranges_sys: ranges_sys.clone(),
        input_box_vars: spec.inputs.clone(),
        icp_budget: icp_budget.clone(),
        unknown: false,
        unsafe_found: false,
    };
    let identity: Vec<Vec<Rat>> = (0..net.input_dim())
        .map(|i| {
            (0..net.input_dim())
                .map(|j| if i == j { rat::one() } else { rat::zero() })
                .collect()
        })
        .collect();
    let prefix = OraclePrefix {
        matrix: identity,
        bias: vec![rat::zero(); net.input_dim()],
        cell: ranges_sys,
        layer: 0,
        neuron: 0,
    };
    oracle.descend(prefix);
    if oracle.unsafe_found {
        OracleVerdict::Unsafe
    } else if oracle.unknown {
        OracleVerdict::Unknown
    } else {
        OracleVerdict::Safe
    }
}

impl Oracle<'_> {
    fn descend(&mut self, prefix: OraclePrefix) {
        if self.unsafe_found {
            return;
        }
        if prefix.layer == self.net.layers.len() {
            self.decide_cell(&prefix);
            return;
        }
        let layer = &self.net.layers[prefix.layer];
        if prefix.neuron == 0 && prefix.layer > 0 || prefix.layer == 0 && prefix.neuron == 0 {
            // Nothing special; composition happens below per layer entry.
        }
        // Compose the affine layer once when entering it.
        let (matrix, bias) = if prefix.neuron == 0 {
            let mut matrix = Vec::with_capacity(layer.out_dim());
            let mut bias = Vec::with_capacity(layer.out_dim());
            for (row, b) in layer.weights.iter().zip(&layer.bias) {
                let mut new_row = vec![rat::zero(); self.net.input_dim()];
                let mut new_b = b.clone();
                for (w, (mrow, mb)) in row.iter().zip(prefix.matrix.iter().zip(&prefix.bias)) {
                    for (nr, m) in new_row.iter_mut().zip(mrow) {
                        *nr += w * m;
                    }
                    new_b += w * mb;
                }
                matrix.push(new_row);
                bias.push(new_b);
            }
            (matrix, bias)
        } else {
            (prefix.matrix.clone(), prefix.bias.clone())
        };
        if layer.activation == Activation::Linear || prefix.neuron == layer.out_dim() {
            let next = OraclePrefix {
                matrix,
                bias,
                cell: prefix.cell,
                layer: prefix.layer + 1,
                neuron: 0,
            };
            return self.descend(next);
        }
        let j = prefix.neuron;
        // Active branch: pre >= 0.
        {
            let mut cell = prefix.cell.clone();
            cell.push(
                matrix[j].iter().map(|c| -c.clone()).collect(),
                LinRel::Le,
                bias[j].clone(),
            );
            if lp_feasible_fast(&cell, self.counters).is_sat() {
                self.descend(OraclePrefix {
                    matrix: matrix.clone(),
                    bias: bias.clone(),
                    cell,
                    layer: prefix.layer,
                    neuron: j + 1,
                });
            }
        }
        if self.unsafe_found {
            return;
        }
        // Inactive branch: pre <= 0, output row zeroed.
        {
            let mut cell = prefix.cell;
            cell.push(matrix[j].clone(), LinRel::Le, -bias[j].clone());
            if lp_feasible_fast(&cell, self.counters).is_sat() {
                let mut matrix = matrix;
                let mut bias = bias;
                for c in matrix[j].iter_mut() {
                    *c = rat::zero();
                }
                bias[j] = rat::zero();
                self.descend(OraclePrefix {
                    matrix,
                    bias,
                    cell,
                    layer: prefix.layer,
                    neuron: j + 1,
                });
            }
        }
    }

    /// Decide the original formula on one full-pattern cell.
    fn decide_cell(&mut self, prefix: &OraclePrefix) {
        use mosaic_core::formula::Term;
        // Substitution map: output variable -> affine term over inputs.
        let subs: BTreeMap<String, Term> = self
            .spec
            .outputs
            .iter()
            .enumerate()
            .map(|(k, name)| {
                let mut t = Term::constant(prefix.bias[k].clone());
                for (c, v) in prefix.matrix[k].iter().zip(&self.spec.inputs) {
                    t = t.add(&Term::var(v).scale(c));
                }
                (name.clone(), t)
            })
            .collect();
        // Output range constraints under the substitution.
        let mut range_constraints = Vec::new();
        for (k, name) in self.spec.outputs.iter().enumerate() {
            let (lo, hi) = self.spec.ranges.get(name).expect("ranged");
            let mut t = Term::constant(prefix.bias[k].clone());
            for (c, v) in prefix.matrix[k].iter().zip(&self.spec.inputs) {
                t = t.add(&Term::var(v).scale(c));
            }
            range_constraints.push(mosaic_core::theory::PolyConstraint::new(
                t.sub(&Term::constant(hi.clone())),
                mosaic_core::formula::Relation::Le,
            ));
            range_constraints.push(mosaic_core::theory::PolyConstraint::new(
                t.sub(&Term::constant(lo.clone())),
                mosaic_core::formula::Relation::Ge,
            ));
        }
        // Bounding box of the cell: input ranges suffice (the cell already
        // contains the range rows).
        let b = IntervalBox::new(
            self.input_box_vars.clone(),
            self.spec
                .inputs
                .iter()
                .map(|v| self.spec.ranges.get(v).unwrap().0.clone())
                .collect(),
            self.spec
                .inputs
                .iter()
                .map(|v| self.spec.ranges.get(v).unwrap().1.clone())
                .collect(),
        );
        let dnf = self.dnf.clone();
        for conj in &dnf {
            // Substitute outputs away in every literal.
            let substituted: Vec<SignedAtom> = conj
                .iter()
                .map(|(a, pos)| {
                    let a = match a {
                        Atom::Poly { term, rel } => Atom::Poly {
                            term: term.substitute(&subs),
                            rel: *rel,
                        },
                        Atom::ArgmaxIs(_) => a.clone(),
                    };
                    (a, *pos)
                })
                .collect();
            // The argmax atoms still mention outputs; expand through the
            // substitution-aware literal lowering by rewriting them first.
            let mut lowered: Vec<Vec<mosaic_core::theory::PolyConstraint>> = Vec::new();
            for branch in literal_dnf(&substituted, &self.spec.outputs) {
                let branch: Vec<_> = branch
                    .into_iter()
                    .map(|pc| {
                        mosaic_core::theory::PolyConstraint::new(
                            pc.term.substitute(&subs),
                            pc.rel,
                        )
                    })
                    .collect();
                lowered.push(branch);
            }
            for branch in lowered {
                let mut constraints = branch;
                constraints.extend(range_constraints.iter().cloned());
                // Cell rows as constraints.
                for row in &prefix.cell.rows {
                    let mut t = Term::constant(-row.rhs.clone());
                    for (c, v) in row.coeffs.iter().zip(&self.spec.inputs) {
                        t = t.add(&Term::var(v).scale(c));
                    }
                    let rel = match row.rel {
                        LinRel::Le => mosaic_core::formula::Relation::Le,
                        LinRel::Lt => mosaic_core::formula::Relation::Lt,
                        LinRel::Eq => mosaic_core::formula::Relation::Eq,
                    };
                    constraints.push(mosaic_core::theory::PolyConstraint::new(t, rel));
                }
                let verdict = if constraints.iter().all(|c| c.is_linear()) {
                    let mut sys = LinSystem::new(self.spec.inputs.clone());
                    for (i, v) in self.spec.inputs.iter().enumerate() {
                        let (lo, hi) = self.spec.ranges.get(v).unwrap();
                        let mut up = vec![rat::zero(); self.spec.inputs.len()];
                        up[i] = rat::one();
                        sys.push(up.clone(), LinRel::Le, hi.clone());
                        for c in up.iter_mut() {
                            *c = -c.clone();
                        }
                        sys.push(up, LinRel::Le, -lo.clone());
                    }
                    for c in &constraints {
                        push_linear_constraint(&mut sys, c);
                    }
                    lp_feasible_fast(&sys, self.counters)
                } else {
                    icp_check(&constraints, &b, &self.icp_budget, self.counters).verdict
                };
                match verdict {
                    TheoryVerdict::Sat(assignment) => {
                        // Double-check through the real network.
                        let z: Vec<Rat> = self
                            .spec
                            .inputs
                            .iter()
                            .map(|v| assignment[v].clone())
                            .collect();
                        if is_counterexample(self.spec, self.net, &z) {
                            self.unsafe_found = true;
                            return;
                        }
                        // A satisfying point of cell ∧ formula whose network
                        // trace disagrees would mean the cell was wrong;
                        // treat conservatively as unknown.
                        self.unknown = true;
                    }
                    TheoryVerdict::Unsat => {}
                    TheoryVerdict::Unknown(_) => {
                        self.unknown = true;
                    }
                }
            }
        }
    }
}
