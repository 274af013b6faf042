//! Decomposition of a query into azulejos: pairwise-disjoint linear input
//! regions, each carrying a normalized linear query (input conjunction plus
//! an output DNF) and a DNF of the remaining exact constraints.
//!
//! The outer loop enumerates skeleton models and freezes each model's total
//! sign assignment over the linear input-only atoms (the azulejo). Two
//! inner enumerations run on clones of the clause database: one collects
//! linear mixed/output conjunctions (the reachability query), the other
//! collects the exact-constraint conjunctions used by the filter. Every
//! candidate conjunction passes a theory feasibility gate (exact LP for
//! linear constraints, interval propagation for polynomial ones); interval
//! `Unknown`s are retained rather than dropped, so over-inclusion is the
//! only possible error direction and soundness is preserved.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;


use crate::formula::{skeleton, Atom, AtomDict, Formula, QuerySpec, Relation};
use crate::rat::{self, Rat};
use crate::satcore::{ClauseDb, Lit, SolveResult};
use crate::stats::Counters;
use crate::theory::{
    icp_check, literal_dnf, lp_feasible_fast, push_linear_constraint, IcpBudget,
    IntervalBox, LinRel, LinSystem, SignedAtom,
};

/// One azulejo: a total polarity over the linear input-only atoms, with its
/// LP-feasible constraint system over the inputs (range rows included).
#[derive(Clone, Debug)]
pub struct Azulejo {
    pub literals: Vec<SignedAtom>,
    pub system: LinSystem,
}

/// A conjunction of linear mixed/output literals, compiled into one or more
/// constraint systems over `inputs ++ outputs` (disequalities and negated
/// argmax literals expand into branches). Output range rows are included.
#[derive(Clone, Debug)]
pub struct OutputConj {
    pub literals: Vec<SignedAtom>,
    pub systems: Vec<LinSystem>,
}

/// One normalized query: `q_l = azulejo ∧ ⋁ output_dnf` goes to the
/// reachability engine; `nonlinear_dnf` holds the exact-side conjunctions
/// for the counterexample filter. Entries of `nonlinear_dnf` keep the
/// linear mixed/output literals they were found with, which preserves the
/// correlation between linear and nonlinear atoms and hence exact
/// equivalence of the emitted disjunction with the input query.
#[derive(Clone, Debug)]
pub struct NormalizedQuery {
    pub index: usize,
    pub azulejo: Azulejo,
    pub output_dnf: Vec<OutputConj>,
    pub nonlinear_dnf: Vec<Vec<SignedAtom>>,
    /// Atoms introduced by linearization; dropped from filter formulas.
    pub approx_atoms: Arc<BTreeSet<Atom>>,
}

impl NormalizedQuery {
    /// Exact membership of a state in `q_l ∧ q_n`.
    pub fn holds(&self, state: &BTreeMap<String, Rat>, outputs: &[String]) -> bool {
        let input_point: Vec<Rat> = self
            .azulejo
            .system
            .vars
            .iter()
            .map(|v| state[v].clone())
            .collect();
        if !self.azulejo.system.contains(&input_point) {
            return false;
        }
        let conj_holds = |lits: &[SignedAtom]| {
            lits.iter()
                .all(|(a, pos)| a.eval(state, outputs).map(|v| v == *pos).unwrap_or(false))
        };
        self.output_dnf.iter().any(|c| conj_holds(&c.literals))
            && self.nonlinear_dnf.iter().any(|c| conj_holds(c))
    }
}

/// Decomposition settings.
#[derive(Clone, Debug)]
pub struct MosaicConfig {
    /// Cache theory verdicts keyed by the sorted literal set.
    pub use_cache: bool,
    /// Budget for the interval gate on exact-side conjunctions.
    pub icp_budget: IcpBudget,
}

impl Default for MosaicConfig {
    fn default() -> Self {
        // The gate only prunes: an inconclusive interval check retains the
        // conjunction for the filter, so a small split budget is safe.
        MosaicConfig {
            use_cache: true,
            icp_budget: IcpBudget { max_boxes: 400, ..Default::default() },
        }
    }
}

/// Decomposition result plus observability counters.
#[derive(Debug, Default)]
pub struct Decomposition {
    pub queries: Vec<NormalizedQuery>,
    /// Distinct azulejo sign patterns (before disequality branching).
    pub azulejo_patterns: usize,
    pub theory_calls: u64,
    pub cache_hits: u64,
}

struct Ctx<'a> {
    spec: &'a QuerySpec,
    dict: AtomDict,
    l_in: Vec<usize>,
    l_out: Vec<usize>,
    nonlinear: Vec<usize>,
    cfg: &'a MosaicConfig,
    counters: &'a Counters,
    lp_cache: BTreeMap<Vec<Lit>, bool>,
    icp_cache: BTreeMap<Vec<Lit>, bool>,
    theory_calls: u64,
    cache_hits: u64,
    in_ranges: LinSystem,
    full_box: IntervalBox,
}

impl Ctx<'_> {
    fn signed(&self, lit: Lit) -> SignedAtom {
        (self.dict.atom_of(lit.var()).clone(), lit.positive())
    }

    fn signed_all(&self, lits: &[Lit]) -> Vec<SignedAtom> {
        lits.iter().map(|l| self.signed(*l)).collect()
    }

    /// LP feasibility of a conjunction of linear literals over the inputs
    /// and outputs, with range rows. Branches from disequalities are
    /// disjunctive: feasible iff some branch is.
    fn lp_gate(&mut self, key: &[Lit], literals: &[SignedAtom], over_outputs: bool) -> bool {
        let mut cache_key = key.to_vec();
        cache_key.sort();
        cache_key.insert(0, Lit::pos(if over_outputs { 2 } else { 1 }));
        if self.cfg.use_cache {
            if let Some(&hit) = self.lp_cache.get(&cache_key) {
                self.cache_hits += 1;
                Counters::bump(&self.counters.cache_hits);
                return hit;
            }
        }
        let vars: Vec<String> = if over_outputs {
            self.spec
                .inputs
                .iter()
                .chain(&self.spec.outputs)
                .cloned()
                .collect()
        } else {
            self.spec.inputs.clone()
        };
        let mut base = LinSystem::new(vars.clone());
        for v in &vars {
            let (lo, hi) = self.spec.ranges.get(v).expect("validated ranges");
            let mut up = vec![rat::zero(); vars.len()];
            let idx = vars.iter().position(|n| n == v).unwrap();
            up[idx] = rat::one();
            base.push(up.clone(), LinRel::Le, hi.clone());
            for c in up.iter_mut() {
                *c = -c.clone();
            }
            base.push(up, LinRel::Le, -lo.clone());
        }
        let mut feasible = false;
        for branch in literal_dnf(literals, &self.spec.outputs) {
            let mut sys = base.clone();
            for pc in &branch {
                push_linear_constraint(&mut sys, pc);
            }
            self.theory_calls += 1;
            if lp_feasible_fast(&sys, self.counters).is_sat() {
                feasible = true;
                break;
            }
        }
        if self.cfg.use_cache {
            self.lp_cache.insert(cache_key, feasible);
        }
        feasible
    }

    /// Interval gate for conjunctions containing polynomial literals.
    /// Returns `false` only on a definite refutation of every branch;
    /// `Unknown` outcomes retain the conjunction.
    fn icp_gate(&mut self, key: &[Lit], literals: &[SignedAtom]) -> bool {
        let mut cache_key = key.to_vec();
        cache_key.sort();
        if self.cfg.use_cache {
            if let Some(&hit) = self.icp_cache.get(&cache_key) {
                self.cache_hits += 1;
                Counters::bump(&self.counters.cache_hits);
                return hit;
            }
        }
        let mut keep = false;
        for branch in literal_dnf(literals, &self.spec.outputs) {
            self.theory_calls += 1;
            let out = icp_check(&branch, &self.full_box, &self.cfg.icp_budget, self.counters);
            if !out.verdict.is_unsat() {
                keep = true;
                break;
            }
        }
        if self.cfg.use_cache {
            self.icp_cache.insert(cache_key, keep);
        }
        keep
    }

    /// Deletion-minimized subset of literals that stays LP-infeasible;
    /// added to the clause databases as a theory lemma. Only attempted for
    /// branch-free conjunctions.
    fn lp_core(&mut self, lits: &[Lit], over_outputs: bool) -> Vec<Lit> {
        let branch_free = lits.iter().all(|l| {
            let (atom, pos) = self.signed(*l);
            match atom {
                Atom::Poly { rel, .. } => {
                    let effective = if pos { rel } else { rel.negated() };
                    effective != Relation::Ne
                }
                Atom::ArgmaxIs(_) => pos,
            }
        });
        if !branch_free {
            return lits.to_vec();
        }
        let mut core: Vec<Lit> = lits.to_vec();
        let mut i = 0;
        while core.len() > 1 && i < core.len() {
            let mut trial = core.clone();
            trial.remove(i);
            let signed = self.signed_all(&trial);
            if !self.lp_gate(&trial, &signed, over_outputs) {
                core = trial;
            } else {
                i += 1;
            }
        }
        core
    }

    fn azulejo_systems(&self, literals: &[SignedAtom]) -> Vec<LinSystem> {
        literal_dnf(literals, &self.spec.outputs)
            .into_iter()
            .map(|branch| {
                let mut sys = self.in_ranges.clone();
                for pc in &branch {
                    push_linear_constraint(&mut sys, pc);
                }
                sys
            })
            .collect()
    }

    fn compile_output_conj(&self, literals: Vec<SignedAtom>) -> OutputConj {
        let vars: Vec<String> = self
            .spec
            .inputs
            .iter()
            .chain(&self.spec.outputs)
            .cloned()
            .collect();
        let systems = literal_dnf(&literals, &self.spec.outputs)
            .into_iter()
            .map(|branch| {
                let mut sys = LinSystem::new(vars.clone());
                for (i, out) in self.spec.outputs.iter().enumerate() {
                    let (lo, hi) = self.spec.ranges.get(out).expect("validated ranges");
                    let col = self.spec.inputs.len() + i;
                    let mut up = vec![rat::zero(); vars.len()];
                    up[col] = rat::one();
                    sys.push(up.clone(), LinRel::Le, hi.clone());
                    for c in up.iter_mut() {
                        *c = -c.clone();
                    }
                    sys.push(up, LinRel::Le, -lo.clone());
                }
                for pc in &branch {
                    push_linear_constraint(&mut sys, pc);
                }
                sys
            })
            .collect();
        OutputConj { literals, systems }
    }
}

/// Decompose an augmented query into normalized queries.
///
/// `p_o` may be any formula; it is brought into negation normal form here.
/// `approx_atoms` is the linearization's bookkeeping (threaded through to
/// the filter).
pub fn decompose(
    p_o: &Formula,
    spec: &QuerySpec,
    approx_atoms: &BTreeSet<Atom>,
    cfg: &MosaicConfig,
    counters: &Counters,
) -> Decomposition {
    let nnf = p_o.nnf();
    let mut out = Decomposition::default();
    if nnf == Formula::False {
        return out;
    }
    let (skel, dict) = skeleton(&nnf);
    let cnf = skel.to_cnf();
    if cnf.iter().any(|c| c.is_empty()) {
        return out;
    }

    let input_vars: BTreeSet<String> = spec.inputs.iter().cloned().collect();
    let mut l_in = Vec::new();
    let mut l_out = Vec::new();
    let mut nonlinear = Vec::new();
    for var in 1..=dict.len() {
        let kind = dict.atom_of(var).kind(&input_vars, &spec.outputs);
        if !kind.linear {
            nonlinear.push(var);
        } else if kind.input_only {
            l_in.push(var);
        } else {
            l_out.push(var);
        }
    }

    let mut db = ClauseDb::new(dict.len());
    for clause in cnf {
        db.add_clause(
            clause
                .into_iter()
                .map(|l| Lit::new(l.var, l.positive))
                .collect(),
        );
    }
    for clause in linear_dependencies(&dict) {
        db.add_clause(clause);
    }

    let mut in_ranges = LinSystem::new(spec.inputs.clone());
    for (i, v) in spec.inputs.iter().enumerate() {
        let (lo, hi) = spec.ranges.get(v).expect("validated ranges");
        let mut up = vec![rat::zero(); spec.inputs.len()];
        up[i] = rat::one();
        in_ranges.push(up.clone(), LinRel::Le, hi.clone());
        for c in up.iter_mut() {
            *c = -c.clone();
        }
        in_ranges.push(up, LinRel::Le, -lo.clone());
    }
    let all_vars: Vec<String> = spec.inputs.iter().chain(&spec.outputs).cloned().collect();
    let full_box = IntervalBox::new(
        all_vars.clone(),
        all_vars
            .iter()
            .map(|v| spec.ranges.get(v).unwrap().0.clone())
            .collect(),
        all_vars
            .iter()
            .map(|v| spec.ranges.get(v).unwrap().1.clone())
            .collect(),
    );

    let mut ctx = Ctx {
        spec,
        dict,
        l_in,
        l_out,
        nonlinear,
        cfg,
        counters,
        lp_cache: BTreeMap::new(),
        icp_cache: BTreeMap::new(),
        theory_calls: 0,
        cache_hits: 0,
        in_ranges,
        full_box,
    };
    let shared_approx = Arc::new(approx_atoms.clone());

    loop {
        let model = match db.solve(&[], counters) {
            SolveResult::Model(m) => m,
            SolveResult::Unsat(_) => break,
        };
        let az_lits: Vec<Lit> = ctx.l_in.iter().map(|&v| model.lit(v)).collect();
        let az_signed = ctx.signed_all(&az_lits);
        let feasible = az_lits.is_empty() || {
            let signed = az_signed.clone();
            ctx.lp_gate(&az_lits, &signed, false)
        };
        if !feasible {
            let core = ctx.lp_core(&az_lits, false);
            db.block(&core);
            continue;
        }
        out.azulejo_patterns += 1;

        // Inner loop A: linear mixed/output conjunctions under the azulejo.
        let mut output_dnf: Vec<OutputConj> = Vec::new();
        {
            let mut db_a = db.clone();
            loop {
                let m = match db_a.solve(&az_lits, counters) {
                    SolveResult::Model(m) => m,
                    SolveResult::Unsat(_) => break,
                };
                let partial = db_a.minimize_model(&m, &az_lits);
                let o_lits: Vec<Lit> = partial
                    .iter()
                    .copied()
                    .filter(|l| ctx.l_out.contains(&l.var()))
                    .collect();
                if o_lits.is_empty() {
                    // The whole output side is unconstrained here; a single
                    // trivially-true conjunction subsumes anything found.
                    output_dnf = vec![ctx.compile_output_conj(Vec::new())];
                    break;
                }
                let mut combo = az_lits.clone();
                combo.extend(&o_lits);
                let signed = ctx.signed_all(&o_lits);
                let mut all = az_signed.clone();
                all.extend(signed.iter().cloned());
                if ctx.lp_gate(&combo, &all, true) {
                    output_dnf.push(ctx.compile_output_conj(signed));
                } else {
                    let core = ctx.lp_core(&combo, true);
                    db.add_clause(core.iter().map(|l| l.negated()).collect());
                }
                db_a.block(&o_lits);
            }
        }
        if output_dnf.is_empty() {
            // No feasible output region: the azulejo contributes nothing.
            if az_lits.is_empty() {
                break;
            }
            db.block(&az_lits);
            continue;
        }

        // Inner loop B: conjunctions over the exact-side atoms (nonlinear
        // plus correlated mixed/output literals).
        let mut nonlinear_dnf: Vec<Vec<SignedAtom>> = Vec::new();
        if ctx.nonlinear.is_empty() {
            nonlinear_dnf.push(Vec::new());
        } else {
            let mut db_b = db.clone();
            loop {
                let m = match db_b.solve(&az_lits, counters) {
                    SolveResult::Model(m) => m,
                    SolveResult::Unsat(_) => break,
                };
                let partial = db_b.minimize_model(&m, &az_lits);
                let c_lits: Vec<Lit> = partial
                    .iter()
                    .copied()
                    .filter(|l| {
                        ctx.nonlinear.contains(&l.var()) || ctx.l_out.contains(&l.var())
                    })
                    .collect();
                if c_lits.is_empty() {
                    nonlinear_dnf = vec![Vec::new()];
                    break;
                }
                let mut combo = az_lits.clone();
                combo.extend(&c_lits);
                let signed = ctx.signed_all(&c_lits);
                let mut all = az_signed.clone();
                all.extend(signed.iter().cloned());
                if ctx.icp_gate(&combo, &all) {
                    nonlinear_dnf.push(signed);
                }
                db_b.block(&c_lits);
            }
        }
        if nonlinear_dnf.is_empty() {
            if az_lits.is_empty() {
                break;
            }
            db.block(&az_lits);
            continue;
        }

        for system in ctx.azulejo_systems(&az_signed) {
            ctx.theory_calls += 1;
            if !lp_feasible_fast(&system, counters).is_sat() {
                continue;
            }
            out.queries.push(NormalizedQuery {
                index: out.queries.len(),
                azulejo: Azulejo { literals: az_signed.clone(), system },
                output_dnf: output_dnf.clone(),
                nonlinear_dnf: nonlinear_dnf.clone(),
                approx_atoms: Arc::clone(&shared_approx),
            });
        }

        if az_lits.is_empty() {
            break;
        }
        db.block(&az_lits);
    }

    out.theory_calls = ctx.theory_calls;
    out.cache_hits = ctx.cache_hits;
    out
}

/// Entailed skeleton clauses between linear atoms sharing one hyperplane
/// direction: subset, exclusion and totality relations between the
/// half-line value sets.
pub fn linear_dependencies(dict: &AtomDict) -> Vec<Vec<Lit>> {
    // Group by normalized direction: coefficients scaled so the first
    // variable's coefficient is +1.
    let mut groups: BTreeMap<Vec<(String, Rat)>, Vec<(usize, Relation, Rat)>> = BTreeMap::new();
    for var in 1..=dict.len() {
        let Atom::Poly { term, rel } = dict.atom_of(var) else {
            continue;
        };
        let Some((coeffs, constant)) = term.linear_parts() else {
            continue;
        };
        if coeffs.is_empty() {
            continue;
        }
        let lead = coeffs.values().next().unwrap().clone();
        let direction: Vec<(String, Rat)> = coeffs
            .iter()
            .map(|(v, c)| (v.clone(), c / &lead))
            .collect();
        // term rel 0 with term = lead·(u·x) + constant becomes
        // u·x rel' (−constant/lead), flipping for a negative lead.
        let threshold = -&constant / &lead;
        let rel = if lead > rat::zero() { *rel } else { rel.flipped() };
        groups.entry(direction).or_default().push((var, rel, threshold));
    }
    let mut clauses = Vec::new();
    for atoms in groups.values() {
        for i in 0..atoms.len() {
            for j in (i + 1)..atoms.len() {
                let (va, ra, ca) = &atoms[i];
                let (vb, rb, cb) = &atoms[j];
                if halfline_subset(*ra, ca, *rb, cb) {
                    clauses.push(vec![Lit::neg(*va), Lit::pos(*vb)]);
                }
                if halfline_subset(*rb, cb, *ra, ca) {
                    clauses.push(vec![Lit::neg(*vb), Lit::pos(*va)]);
                }
                // Disjoint: A ⊆ complement(B).
                if halfline_subset(*ra, ca, rb.negated(), cb) {
                    clauses.push(vec![Lit::neg(*va), Lit::neg(*vb)]);
                }
                // Covering: complement(A) ⊆ B.
                if halfline_subset(ra.negated(), ca, *rb, cb) {
                    clauses.push(vec![Lit::pos(*va), Lit::pos(*vb)]);
                }
            }
        }
    }
    clauses
}

/// Is `{v : v r1 c1} ⊆ {v : v r2 c2}`?
fn halfline_subset(r1: Relation, c1: &Rat, r2: Relation, c2: &Rat) -> bool {
    use Relation::*;
    match (r1, r2) {
        (Lt, Lt) | (Lt, Le) => c1 <= c2,
        (Le, Lt) => c1 < c2,
        (Le, Le) => c1 <= c2,
        (Lt, Ne) => c1 <= c2,
        (Le, Ne) => c1 < c2,
        (Gt, Gt) | (Gt, Ge) => c1 >= c2,
        (Ge, Gt) => c1 > c2,
        (Ge, Ge) => c1 >= c2,
        (Gt, Ne) => c1 >= c2,
        (Ge, Ne) => c1 > c2,
        (Eq, _) => match r2 {
            Lt => c1 < c2,
            Le => c1 <= c2,
            Eq => c1 == c2,
            Ne => c1 != c2,
            Ge => c1 >= c2,
            Gt => c1 > c2,
        },
        (Ne, Ne) => c1 == c2,
        _ => false,
    }
}

/// JSON view of a normalized query for `--dump-queries`.
pub fn query_to_json(q: &NormalizedQuery) -> serde_json::Value {
    use serde_json::json;
    let system_json = |sys: &LinSystem| {
        json!({
            "vars": sys.vars,
            "A": sys.rows.iter().map(|r| r.coeffs.iter().map(rat::display).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "relations": sys.rows.iter().map(|r| r.rel.symbol()).collect::<Vec<_>>(),
            "b": sys.rows.iter().map(|r| rat::display(&r.rhs)).collect::<Vec<_>>(),
        })
    };
    let lits_json = |lits: &[SignedAtom]| {
        lits.iter()
            .map(|(a, pos)| {
                if *pos {
                    format!("{}", a)
                } else {
                    format!("!({})", a)
                }
            })
            .collect::<Vec<_>>()
    };
    json!({
        "index": q.index,
        "azulejo": {
            "literals": lits_json(&q.azulejo.literals),
            "system": system_json(&q.azulejo.system),
        },
        "output_dnf": q
            .output_dnf
            .iter()
            .map(|c| json!({
                "literals": lits_json(&c.literals),
                "systems": c.systems.iter().map(system_json).collect::<Vec<_>>(),
            }))
            .collect::<Vec<_>>(),
        "nonlinear_dnf": q.nonlinear_dnf.iter().map(|c| lits_json(c)).collect::<Vec<_>>(),
    })
}
