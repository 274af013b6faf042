//! Exact star-set reachability for ReLU networks over an azulejo's input
//! polytope.
//!
//! A star is kept as an affine map over the *input* coordinates together
//! with a polyhedral predicate in input space, so predicates project
//! directly onto counterexample regions. At each ReLU neuron the engine
//! computes exact pre-activation bounds by LP and splits only when the sign
//! is genuinely undetermined (boundary-touching stars follow both branches,
//! which keeps the emitted pattern set identical to the closed-cell
//! brute-force oracle). No over-approximation pre-pass is used.

use num_traits::Zero;

use crate::error::VerifyError;
use crate::mosaic::{NormalizedQuery, OutputConj};
use crate::network::{ActivationPattern, AffineMap, Activation, Network, NeuronSign};
use crate::rat::{self, Rat};
use crate::stats::Counters;
use crate::theory::{
    lp_extremum, lp_feasible, lp_feasible_fast, Direction, Extremum, LinRel, LinRow, LinSystem,
    TheoryVerdict,
};

/// A counterexample region: an input polytope on which the network is one
/// affine map, with a witness satisfying the linear query.
#[derive(Clone, Debug)]
pub struct CexRegion {
    /// Input polytope (pattern cell intersected with the azulejo).
    pub iota: LinSystem,
    /// The network restricted to `iota`.
    pub omega: AffineMap,
    pub pattern: ActivationPattern,
    /// A point of `iota` where some output disjunct holds.
    pub witness: Vec<Rat>,
}

impl CexRegion {
    /// Canonical sort key: pattern bits.
    fn sort_key(&self) -> Vec<u8> {
        self.pattern
            .0
            .iter()
            .map(|s| match s {
                NeuronSign::Active => 1,
                NeuronSign::Inactive => 0,
            })
            .collect()
    }
}

/// Substitute the network's affine output map into a constraint system over
/// `inputs ++ outputs`, producing rows over inputs only.
fn substitute_outputs(sys: &LinSystem, input_dim: usize, map: &AffineMap) -> Vec<LinRow> {
    sys.rows
        .iter()
        .map(|row| {
            let (in_part, out_part) = row.coeffs.split_at(input_dim);
            let mut coeffs: Vec<Rat> = in_part.to_vec();
            let mut rhs = row.rhs.clone();
            for (c_out, (mrow, mbias)) in out_part
                .iter()
                .zip(map.matrix.iter().zip(&map.bias))
            {
                if c_out.is_zero() {
                    continue;
                }
                for (acc, m) in coeffs.iter_mut().zip(mrow) {
                    *acc += c_out * m;
                }
                rhs -= c_out * mbias;
            }
            LinRow { coeffs, rel: row.rel, rhs }
        })
        .collect()
}

struct Reach<'a> {
    net: &'a Network,
    output_dnf: &'a [OutputConj],
    counters: &'a Counters,
    first_only: bool,
    regions: Vec<CexRegion>,
    leaves: u64,
}

impl Reach<'_> {
    /// Depth-first exploration starting at `layer` with the map of the
    /// network prefix already applied.
    fn layer(&mut self, layer: usize, map: AffineMap, predicate: LinSystem, trace: Vec<NeuronSign>) {
        if self.first_only && !self.regions.is_empty() {
            return;
        }
        if layer == self.net.layers.len() {
            self.leaf(map, predicate, trace);
            return;
        }
        let l = &self.net.layers[layer];
        // Compose the layer's affine transformation.
        let mut matrix = Vec::with_capacity(l.out_dim());
        let mut bias = Vec::with_capacity(l.out_dim());
        for (row, b) in l.weights.iter().zip(&l.bias) {
            let mut new_row = vec![rat::zero(); map.in_dim()];
            let mut new_b = b.clone();
            for (w, (mrow, mb)) in row.iter().zip(map.matrix.iter().zip(&map.bias)) {
                if w.is_zero() {
                    continue;
                }
                for (nr, m) in new_row.iter_mut().zip(mrow) {
                    *nr += w * m;
                }
                new_b += w * mb;
            }
            matrix.push(new_row);
            bias.push(new_b);
        }
        let pre = AffineMap { matrix, bias };
        match l.activation {
            Activation::Linear => self.layer(layer + 1, pre, predicate, trace),
            Activation::Relu => self.neuron(layer, 0, pre, predicate, trace),
        }
    }

    /// Process ReLU neurons of one layer sequentially, splitting stars on
    /// undetermined signs.
    fn neuron(
        &mut self,
        layer: usize,
        idx: usize,
        mut pre: AffineMap,
        predicate: LinSystem,
        trace: Vec<NeuronSign>,
    ) {
        if self.first_only && !self.regions.is_empty() {
            return;
        }
        if idx == pre.out_dim() {
            self.layer(layer + 1, pre, predicate, trace);
            return;
        }
        let (coeffs, constant) = {
            let (c, b) = pre.row(idx);
            (c.to_vec(), b.clone())
        };
        // min first: a positive minimum settles the sign with one LP.
        let lo = match lp_extremum(&coeffs, &predicate, Direction::Min, self.counters)
            .expect("star predicates stay non-empty")
        {
            Extremum::Value { value, .. } => value + &constant,
            Extremum::Unbounded => unreachable!("azulejo polytopes are bounded"),
        };
        let can_deactivate = lo <= rat::zero();
        let can_activate = if can_deactivate {
            let hi = match lp_extremum(&coeffs, &predicate, Direction::Max, self.counters)
                .expect("star predicates stay non-empty")
            {
                Extremum::Value { value, .. } => value + &constant,
                Extremum::Unbounded => unreachable!("azulejo polytopes are bounded"),
            };
            hi >= rat::zero()
        } else {
            true
        };
        debug_assert!(can_activate || can_deactivate);
        let split = can_activate && can_deactivate;
        if can_activate {
            let mut p = predicate.clone();
            if split {
                // pre >= 0, i.e. -coeffs · z <= constant
                p.push(
                    coeffs.iter().map(|c| -c.clone()).collect(),
                    LinRel::Le,
                    constant.clone(),
                );
            }
            let mut t = trace.clone();
            t.push(NeuronSign::Active);
            self.neuron(layer, idx + 1, pre.clone(), p, t);
        }
        if can_deactivate {
            let mut p = predicate;
            if split {
                p.push(coeffs.clone(), LinRel::Le, -constant.clone());
            }
            let mut t = trace;
            t.push(NeuronSign::Inactive);
            for c in pre.matrix[idx].iter_mut() {
                *c = rat::zero();
            }
            pre.bias[idx] = rat::zero();
            self.neuron(layer, idx + 1, pre, p, t);
        }
    }

    /// Output layer: test the star against every output disjunct.
    fn leaf(&mut self, map: AffineMap, predicate: LinSystem, trace: Vec<NeuronSign>) {
        self.leaves += 1;
        Counters::bump(&self.counters.stars);
        let input_dim = self.net.input_dim();
        for conj in self.output_dnf {
            for branch in &conj.systems {
                let mut candidate = predicate.clone();
                for row in substitute_outputs(branch, input_dim, &map) {
                    candidate.rows.push(row);
                }
                if let TheoryVerdict::Sat(assignment) = lp_feasible(&candidate, self.counters) {
                    let witness: Vec<Rat> = predicate
                        .vars
                        .iter()
                        .map(|v| assignment[v].clone())
                        .collect();
                    self.regions.push(CexRegion {
                        iota: predicate.clone(),
                        omega: map.clone(),
                        pattern: ActivationPattern(trace.clone()),
                        witness,
                    });
                    if self.first_only {
                        return;
                    }
                    // One region per feasible disjunct; other branches of
                    // the same disequality expansion are alternatives.
                    break;
                }
            }
        }
    }
}

/// Statistics of one enumeration run.
#[derive(Clone, Copy, Debug, Default)]
pub struct ReachStats {
    pub leaf_stars: u64,
}

/// Enumerate all counterexample regions of a normalized query: every
/// activation-pattern cell intersecting the azulejo whose affine image
/// meets some output disjunct. The union of the emitted `iota` covers
/// every input satisfying the linear query.
pub fn enumerate_regions(
    net: &Network,
    q: &NormalizedQuery,
    counters: &Counters,
) -> (Vec<CexRegion>, ReachStats) {
    let mut engine = Reach {
        net,
        output_dnf: &q.output_dnf,
        counters,
        first_only: false,
        regions: Vec::new(),
        leaves: 0,
    };
    run(&mut engine, net, &q.azulejo.system);
    let mut regions = engine.regions;
    regions.sort_by_key(|r| r.sort_key());
    (regions, ReachStats { leaf_stars: engine.leaves })
}

fn run(engine: &mut Reach, net: &Network, input_system: &LinSystem) {
    // Skip empty azulejos outright.
    if !lp_feasible_fast(input_system, engine.counters).is_sat() {
        return;
    }
    engine.layer(
        0,
        AffineMap::identity(net.input_dim()),
        input_system.clone(),
        Vec::new(),
    );
}

/// First counterexample point of a normalized linear query, if any: the
/// native engine in fail-fast mode. This is the `single` solver used by
/// the exclusion loop.
pub fn first_counterexample(
    net: &Network,
    input_system: &LinSystem,
    output_dnf: &[OutputConj],
    counters: &Counters,
) -> Option<Vec<Rat>> {
    let mut engine = Reach {
        net,
        output_dnf,
        counters,
        first_only: true,
        regions: Vec::new(),
        leaves: 0,
    };
    run(&mut engine, net, input_system);
    engine.regions.into_iter().next().map(|r| r.witness)
}

/// Generalize a counterexample point into the region on which the network
/// stays affine: the closed cell of the point's activation pattern with the
/// local affine map.
pub fn generalize(net: &Network, z0: &[Rat], input_vars: &[String]) -> CexRegion {
    let pattern = net.pattern(z0);
    let (omega, iota) = net.local_affine(&pattern, input_vars);
    CexRegion { iota, omega, pattern, witness: z0.to_vec() }
}

/// Signature of a one-counterexample solver for the exclusion loop.
pub type SingleSolver<'s> =
    &'s dyn Fn(&Network, &LinSystem, &[OutputConj], &Counters) -> Option<Vec<Rat>>;

/// Enumerate counterexample regions by repeated solving and exclusion:
/// ask `single` for a counterexample, generalize it, conjoin the negated
/// region, and recurse on one sub-query per negated half-space. Emits the
/// same region union as the native engine.
pub fn enumerate_by_exclusion(
    net: &Network,
    q: &NormalizedQuery,
    single: SingleSolver,
    counters: &Counters,
) -> Result<Vec<CexRegion>, VerifyError> {
    let max_regions: u64 = 1u64
        .checked_shl(net.num_relus() as u32)
        .unwrap_or(u64::MAX);
    let mut regions: Vec<CexRegion> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    let mut worklist = std::collections::VecDeque::new();
    worklist.push_back(q.azulejo.system.clone());
    let mut processed: u64 = 0;
    while let Some(sys) = worklist.pop_front() {
        processed += 1;
        if processed > 10_000 {
            return Err(VerifyError::Budget(
                "exclusion-mode worklist exceeded 10000 sub-queries".into(),
            ));
        }
        let Some(z0) = single(net, &sys, &q.output_dnf, counters) else {
            continue;
        };
        let generalized = generalize(net, &z0, &q.azulejo.system.vars);
        if seen.insert(generalized.pattern.clone()) {
            // Region polytope: cell ∩ azulejo, matching the native engine.
            let mut iota = q.azulejo.system.clone();
            iota.extend(&generalized.iota);
            regions.push(CexRegion {
                iota,
                omega: generalized.omega.clone(),
                pattern: generalized.pattern.clone(),
                witness: z0.clone(),
            });
            if regions.len() as u64 > max_regions {
                return Err(VerifyError::Budget(format!(
                    "region count exceeded 2^{} — blocking failed",
                    net.num_relus()
                )));
            }
        }
        // Exclude the cell: one sub-query per negated half-space.
        for row in &generalized.iota.rows {
            let mut sub = sys.clone();
            let negated = LinRow {
                coeffs: row.coeffs.iter().map(|c| -c.clone()).collect(),
                rel: LinRel::Lt,
                rhs: -row.rhs.clone(),
            };
            sub.rows.push(negated);
            worklist.push_back(sub);
        }
    }
    regions.sort_by_key(|r| r.sort_key());
    Ok(regions)
}
