//! Incremental propositional satisfiability with assumptions, blocking
//! clauses and greedy model minimization.
//!
//! A small DPLL engine with two-watched-literal propagation and
//! deterministic branching (lowest unassigned variable first, positive
//! polarity first). Skeleton instances in this pipeline stay around a
//! hundred variables, so no clause learning or restarts are needed; unsat
//! cores under assumptions are extracted by deletion minimization.

use crate::stats::Counters;

/// A literal: 1-based variable index plus polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lit {
    code: i32,
}

impl Lit {
    pub fn pos(var: usize) -> Lit {
        Lit { code: var as i32 }
    }

    pub fn neg(var: usize) -> Lit {
        Lit { code: -(var as i32) }
    }

    pub fn new(var: usize, positive: bool) -> Lit {
        if positive {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        }
    }

    pub fn var(self) -> usize {
        self.code.unsigned_abs() as usize
    }

    pub fn positive(self) -> bool {
        self.code > 0
    }

    pub fn negated(self) -> Lit {
        Lit { code: -self.code }
    }

    /// Watch-slot index in `[0, 2n)`.
    fn slot(self) -> usize {
        2 * (self.var() - 1) + usize::from(!self.positive())
    }
}

impl std::fmt::Display for Lit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.code)
    }
}

/// A total assignment, indexed by variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn value(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    pub fn lit(&self, var: usize) -> Lit {
        Lit::new(var, self.value(var))
    }

    pub fn num_vars(&self) -> usize {
        self.values.len()
    }

    /// All literals of the model in variable order.
    pub fn literals(&self) -> Vec<Lit> {
        (1..=self.values.len()).map(|v| self.lit(v)).collect()
    }
}

/// Result of a solve call.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Model(Model),
    /// A subset of the assumptions sufficient for infeasibility.
    Unsat(Vec<Lit>),
}

/// CNF clause database with incremental clause addition.
#[derive(Clone, Debug, Default)]
pub struct ClauseDb {
    num_vars: usize,
    clauses: Vec<Vec<Lit>>,
}

impl ClauseDb {
    pub fn new(num_vars: usize) -> Self {
        ClauseDb { num_vars, clauses: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn add_clause(&mut self, mut clause: Vec<Lit>) {
        for l in &clause {
            assert!(l.var() >= 1 && l.var() <= self.num_vars, "literal out of range");
        }
        clause.sort();
        clause.dedup();
        // Skip tautologies; an empty clause is kept (it makes the db unsat).
        for pair in clause.windows(2) {
            if pair[0].var() == pair[1].var() {
                return;
            }
        }
        self.clauses.push(clause);
    }

    /// Add the blocking clause `¬l1 ∨ … ∨ ¬lk` for a literal combination.
    pub fn block(&mut self, literals: &[Lit]) {
        assert!(!literals.is_empty(), "blocking an empty combination");
        self.add_clause(literals.iter().map(|l| l.negated()).collect());
    }

    /// Solve under assumptions. `Unsat` carries a deletion-minimized core.
    pub fn solve(&self, assumptions: &[Lit], counters: &Counters) -> SolveResult {
        match self.solve_raw(assumptions, counters) {
            Some(model) => SolveResult::Model(model),
            None => SolveResult::Unsat(self.minimize_core(assumptions, counters)),
        }
    }

    fn minimize_core(&self, assumptions: &[Lit], counters: &Counters) -> Vec<Lit> {
        let mut core: Vec<Lit> = assumptions.to_vec();
        let mut i = 0;
        while i < core.len() {
            let mut trial = core.clone();
            trial.remove(i);
            if self.solve_raw(&trial, counters).is_none() {
                core = trial;
            } else {
                i += 1;
            }
        }
        core
    }

    fn solve_raw(&self, assumptions: &[Lit], counters: &Counters) -> Option<Model> {
        Counters::bump(&counters.sat_solves);
        if self.clauses.iter().any(|c| c.is_empty()) {
            return None;
        }
        let mut s = Engine::new(self);
        s.search(assumptions)
    }

    /// Greedily drop non-frozen literals from a model while every clause
    /// stays satisfied by the remaining literals. Deterministic: variables
    /// are visited in increasing index order.
    pub fn minimize_model(&self, model: &Model, frozen: &[Lit]) -> Vec<Lit> {
        debug_assert!(self.satisfied_by(model));
        let mut kept: Vec<bool> = vec![true; self.num_vars];
        let frozen_vars: std::collections::BTreeSet<usize> =
            frozen.iter().map(|l| l.var()).collect();
        for var in 1..=self.num_vars {
            if frozen_vars.contains(&var) {
                continue;
            }
            kept[var - 1] = false;
            let ok = self.clauses.iter().all(|clause| {
                clause
                    .iter()
                    .any(|l| kept[l.var() - 1] && model.value(l.var()) == l.positive())
            });
            if !ok {
                kept[var - 1] = true;
            }
        }
        (1..=self.num_vars)
            .filter(|v| kept[v - 1])
            .map(|v| model.lit(v))
            .collect()
    }

    pub fn satisfied_by(&self, model: &Model) -> bool {
        self.clauses.iter().all(|clause| {
            clause.iter().any(|l| model.value(l.var()) == l.positive())
        })
    }
}

/// One DPLL search; rebuilt per solve call (instances are tiny).
struct Engine<'a> {
    db: &'a ClauseDb,
    assign: Vec<Option<bool>>,
    // watches[slot] = clause indices watching that literal
    watches: Vec<Vec<usize>>,
    watched: Vec<[usize; 2]>, // positions of the two watched literals per clause
    trail: Vec<Lit>,
    queue_head: usize,
    // Decision stack: (trail length at decision, literal, flipped?)
    decisions: Vec<(usize, Lit, bool)>,
}

impl<'a> Engine<'a> {
    fn new(db: &'a ClauseDb) -> Self {
        let mut e = Engine {
            db,
            assign: vec![None; db.num_vars],
            watches: vec![Vec::new(); 2 * db.num_vars],
            watched: Vec::with_capacity(db.clauses.len()),
            trail: Vec::new(),
            queue_head: 0,
            decisions: Vec::new(),
        };
        for (i, clause) in db.clauses.iter().enumerate() {
            let w1 = 0;
            let w2 = if clause.len() > 1 { 1 } else { 0 };
            e.watched.push([w1, w2]);
            e.watches[clause[w1].slot()].push(i);
            if w2 != w1 {
                e.watches[clause[w2].slot()].push(i);
            }
        }
        e
    }

    fn value(&self, l: Lit) -> Option<bool> {
        self.assign[l.var() - 1].map(|v| v == l.positive())
    }

    fn enqueue(&mut self, l: Lit) -> bool {
        match self.value(l) {
            Some(true) => true,
            Some(false) => false,
            None => {
                self.assign[l.var() - 1] = Some(l.positive());
                self.trail.push(l);
                true
            }
        }
    }

    /// Two-watched-literal unit propagation. Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.queue_head < self.trail.len() {
            let lit = self.trail[self.queue_head];
            self.queue_head += 1;
            let falsified = lit.negated();
            let slot = falsified.slot();
            let mut i = 0;
            'clauses: while i < self.watches[slot].len() {
                let ci = self.watches[slot][i];
                let clause = &self.db.clauses[ci];
                if clause.len() == 1 {
                    // Watched unit clause is now falsified.
                    if self.value(clause[0]) == Some(false) {
                        return false;
                    }
                    i += 1;
                    continue;
                }
                let [mut wa, mut wb] = self.watched[ci];
                if clause[wb] == falsified {
                    std::mem::swap(&mut wa, &mut wb);
                }
                debug_assert_eq!(clause[wa], falsified);
                let other = clause[wb];
                if self.value(other) == Some(true) {
                    i += 1;
                    continue;
                }
                // Find a replacement watch.
                for (k, &cand) in clause.iter().enumerate() {
                    if k == wa || k == wb {
                        continue;
                    }
                    if self.value(cand) != Some(false) {
                        self.watched[ci] = [k, wb];
                        self.watches[cand.slot()].push(ci);
                        self.watches[slot].swap_remove(i);
                        continue 'clauses;
                    }
                }
                // No replacement: clause is unit or conflicting.
                self.watched[ci] = [wa, wb];
                if !self.enqueue(other) {
                    return false;
                }
                i += 1;
            }
        }
        true
    }

    fn undo_to(&mut self, trail_len: usize) {
        while self.trail.len() > trail_len {
            let l = self.trail.pop().unwrap();
            self.assign[l.var() - 1] = None;
        }
        self.queue_head = self.trail.len();
    }

    /// Chronological backtracking: flip the deepest unflipped decision.
    /// Returns false when the decision stack is exhausted.
    fn backtrack(&mut self) -> bool {
        while let Some((trail_len, lit, flipped)) = self.decisions.pop() {
            self.undo_to(trail_len);
            if !flipped {
                let l = lit.negated();
                self.decisions.push((trail_len, l, true));
                let ok = self.enqueue(l);
                debug_assert!(ok);
                return true;
            }
        }
        false
    }

    fn search(&mut self, assumptions: &[Lit]) -> Option<Model> {
        // Top-level units.
        for ci in 0..self.db.clauses.len() {
            if self.db.clauses[ci].len() == 1 && !self.enqueue(self.db.clauses[ci][0]) {
                return None;
            }
        }
        if !self.propagate() {
            return None;
        }
        // Assumptions are fixed; a conflict that cannot be repaired below
        // them means unsat under these assumptions.
        for &a in assumptions {
            if !self.enqueue(a) || !self.propagate() {
                return None;
            }
        }
        let assumption_floor = self.trail.len();
        loop {
            if !self.propagate() {
                // Backtrack within the search region only.
                loop {
                    if self.decisions.is_empty() {
                        return None;
                    }
                    if self.backtrack() {
                        break;
                    }
                }
                // Re-run propagation after the flip.
                if self.trail.len() < assumption_floor {
                    return None;
                }
                continue;
            }
            // Deterministic branching: lowest unassigned index, positive.
            match (1..=self.db.num_vars).find(|v| self.assign[v - 1].is_none()) {
                None => {
                    let values = self.assign.iter().map(|v| v.unwrap()).collect();
                    return Some(Model { values });
                }
                Some(v) => {
                    let lit = Lit::pos(v);
                    self.decisions.push((self.trail.len(), lit, false));
                    let ok = self.enqueue(lit);
                    debug_assert!(ok);
                }
            }
        }
    }
}
