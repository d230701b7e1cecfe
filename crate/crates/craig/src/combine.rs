//! The combination engine: builds an interpolating metarule refutation for
//! an unsatisfiable pair over EUF + IDL, or reports satisfiability.
//!
//! The search applies, in order: case splits for negated IDL equalities,
//! Terminate (one theory refutes the pure literals), Share (a cross
//! equality between strict constants is forced, so a shared witness term
//! is introduced and a strict constant renamed away), and Decide (branch
//! over boolean assignments to the relevant atoms). Every transformation
//! is recorded as a chain of metarules, so the final tree justifies the
//! extracted interpolant node by node.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::color::{classify_symbols, Color, ColoringError, Locality, Side, SymbolColoring};
use crate::proof::{assemble_chain, ChainStep, Interpolant, MetaRule, ProofError, ProofTree};
use crate::purify::{purify, purify_unchecked, FreshGen, PurifyError};
use crate::term::{
    set_constants, Atom, Formula, FormulaSet, Literal, LiteralClass, Signature, SymbolKind, Term,
    TheoryId,
};
use crate::theory::{solver_for, EqualityWitness, SatCheck, TheoryError};

#[derive(Debug, Error)]
pub enum CombineError {
    #[error("budget exceeded: {0}")]
    Budget(&'static str),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error(transparent)]
    Proof(#[from] ProofError),
    #[error(transparent)]
    Purify(#[from] PurifyError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Search limits and reproducibility knobs.
#[derive(Debug, Clone)]
pub struct Config {
    pub budget_nodes: u64,
    pub budget_calls: u64,
    /// Permutes the exploration order of Share alternatives; 0 keeps the
    /// canonical order. Output is a deterministic function of the seed.
    pub seed: u64,
    /// Cross-check SAT verdicts with the arrangement-based engine.
    pub verify_sat: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config { budget_nodes: 100_000, budget_calls: 10_000, seed: 0, verify_sat: false }
    }
}

/// Outcome of a combined interpolation run.
#[derive(Debug)]
#[allow(clippy::large_enum_variant)]
pub enum CiOutcome {
    Unsat { interpolant: Interpolant, proof: ProofTree },
    Sat,
}

/// The three interpolant conditions, checked with the combined engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyReport {
    pub a_entails: bool,
    pub b_refuted: bool,
    pub common: bool,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.a_entails && self.b_refuted && self.common
    }
}

/// Truth assignment to the relevant atoms of one side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub values: BTreeMap<Atom, bool>,
}

impl Assignment {
    pub fn literals(&self) -> Vec<Literal> {
        self.values
            .iter()
            .map(|(atom, &positive)| Literal { positive, atom: atom.clone() })
            .collect()
    }
}

#[derive(Debug, Clone)]
struct State {
    a: FormulaSet,
    b: FormulaSet,
    /// Negated IDL equalities already split, per side.
    split_done: BTreeSet<(Side, Literal)>,
}

impl State {
    fn side(&self, side: Side) -> &FormulaSet {
        match side {
            Side::A => &self.a,
            Side::B => &self.b,
        }
    }

    fn side_mut(&mut self, side: Side) -> &mut FormulaSet {
        match side {
            Side::A => &mut self.a,
            Side::B => &mut self.b,
        }
    }
}

enum SearchResult {
    Closed(ProofTree),
    Sat,
}

enum DecideAction {
    Split(Atom),
    AddBottom,
}

/// Key of the memo for `check_sat_with_diseqs` verdicts.
type DiseqKey = (TheoryId, Vec<Literal>, Vec<(Term, Term)>);

fn contains_false(set: &FormulaSet) -> bool {
    set.iter().any(Formula::is_false_lit)
}

/// Literal members of a side that belong to a theory's pure fragment.
/// Constant-only equalities are visible to both theories; negated
/// equalities are EUF-only (the IDL core takes them pre-split).
fn side_literals(set: &FormulaSet, theory: TheoryId) -> Vec<Literal> {
    let mut out = Vec::new();
    for f in set {
        let Some(lit) = f.as_literal() else { continue };
        if lit.is_true() {
            continue;
        }
        let include = match (lit.class(), theory) {
            (LiteralClass::Euf, TheoryId::Euf) => true,
            (LiteralClass::Idl, TheoryId::Idl) => {
                lit.positive || !matches!(lit.atom, Atom::Eq(..))
            }
            (LiteralClass::Shared, TheoryId::Euf) => true,
            (LiteralClass::Shared, TheoryId::Idl) => {
                lit.positive || !matches!(lit.atom, Atom::Eq(..))
            }
            _ => false,
        };
        if include {
            out.push(lit.clone());
        }
    }
    out
}

/// Negated-equality literals of a side whose atoms live in the IDL
/// fragment and still await a case split.
fn find_split(state: &State, side: Side) -> Option<Literal> {
    state.side(side).iter().find_map(|f| {
        let lit = f.as_literal()?;
        if lit.positive {
            return None;
        }
        let Atom::Eq(l, r) = &lit.atom else { return None };
        if !l.is_idl_pure() || !r.is_idl_pure() {
            return None;
        }
        if state.split_done.contains(&(side, lit.clone())) {
            return None;
        }
        Some(lit.clone())
    })
}

/// Weighted union-find over IDL bases: tracks `val(x) - val(parent)` so
/// that offset equalities propagate. Used to prune assignment enumeration
/// before any solver runs.
#[derive(Default)]
struct OffsetUf {
    ids: BTreeMap<Term, usize>,
    parent: Vec<usize>,
    offset: Vec<i64>,
}

impl OffsetUf {
    fn id(&mut self, base: &Term) -> usize {
        if let Some(&i) = self.ids.get(base) {
            return i;
        }
        let i = self.parent.len();
        self.ids.insert(base.clone(), i);
        self.parent.push(i);
        self.offset.push(0);
        i
    }

    /// Root of `x` and `val(x) - val(root)`.
    fn find(&mut self, x: usize) -> (usize, i64) {
        if self.parent[x] == x {
            return (x, 0);
        }
        let (root, parent_off) = self.find(self.parent[x]);
        self.parent[x] = root;
        self.offset[x] += parent_off;
        (root, self.offset[x])
    }

    /// Asserts `val(x) = val(y) + n`; false on contradiction.
    fn union(&mut self, x: usize, y: usize, n: i64) -> bool {
        let (rx, ox) = self.find(x);
        let (ry, oy) = self.find(y);
        if rx == ry {
            return ox == oy + n;
        }
        // val(rx) = val(x) - ox = val(y) + n - ox = val(ry) + oy + n - ox
        self.parent[rx] = ry;
        self.offset[rx] = oy + n - ox;
        true
    }

    /// Is `val(x) = val(y) + n` already forced?
    fn forced_equal(&mut self, x: usize, y: usize, n: i64) -> bool {
        let (rx, ox) = self.find(x);
        let (ry, oy) = self.find(y);
        rx == ry && ox == oy + n
    }
}

/// Closure-level inconsistency over the IDL-representable equalities of a
/// literal list: offset equalities propagate through a weighted
/// union-find, disequalities are checked against it. Sound and cheap, not
/// complete; the solvers give the final word at enumeration leaves.
fn cheap_inconsistent(lits: impl Iterator<Item = Literal>) -> bool {
    let mut uf = OffsetUf::default();
    let mut diseqs: Vec<(usize, usize, i64)> = Vec::new();
    for l in lits {
        let Atom::Eq(lt, rt) = &l.atom else { continue };
        let (Some((lb, lo)), Some((rb, ro))) = (lt.as_idl_offset(), rt.as_idl_offset()) else {
            continue;
        };
        let (lb, rb) = (lb.clone(), rb.clone());
        let (x, y) = (uf.id(&lb), uf.id(&rb));
        // val(lb) + lo = val(rb) + ro
        let n = ro - lo;
        if l.positive {
            if !uf.union(x, y, n) {
                return true;
            }
        } else {
            diseqs.push((x, y, n));
        }
    }
    diseqs.into_iter().any(|(x, y, n)| uf.forced_equal(x, y, n))
}

/// Small deterministic permutation used for `--seed`.
fn seeded_shuffle<T>(items: &mut [T], seed: u64) {
    if seed == 0 {
        return;
    }
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    for i in (1..items.len()).rev() {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        items.swap(i, (s % (i as u64 + 1)) as usize);
    }
}

/// One Share application, as observed by the acceptance checks: the pure
/// parts it fired on, the strict constants, the witness tuple with its θ,
/// and the strict-constant count before and after term sharing.
#[derive(Debug, Clone)]
pub struct ShareEvent {
    pub theory: TheoryId,
    pub a_lits: Vec<Literal>,
    pub b_lits: Vec<Literal>,
    pub a_strict: Vec<String>,
    pub b_strict: Vec<String>,
    pub witnesses: Vec<Term>,
    pub theta: Formula,
    pub strict_before: usize,
    pub strict_after: usize,
}

pub struct Combiner {
    sig: Signature,
    config: Config,
    gen: FreshGen,
    nodes_left: u64,
    calls_left: u64,
    /// Nelson-Oppen verdicts for literal conjunctions, reused across the
    /// boolean assignments of one satisfiability query.
    no_memo: HashMap<Vec<Literal>, bool>,
    parts_memo: HashMap<Vec<Literal>, bool>,
    check_memo: HashMap<(TheoryId, Vec<Literal>), bool>,
    diseq_memo: HashMap<DiseqKey, bool>,
    /// Share applications observed in the current run; the acceptance
    /// suite asserts the strict decrease and the witness contract.
    pub share_log: Vec<ShareEvent>,
}

impl Combiner {
    pub fn new(sig: &Signature, config: Config) -> Self {
        Combiner {
            sig: sig.clone(),
            nodes_left: config.budget_nodes,
            calls_left: config.budget_calls,
            config,
            gen: FreshGen::new(),
            no_memo: HashMap::new(),
            parts_memo: HashMap::new(),
            check_memo: HashMap::new(),
            diseq_memo: HashMap::new(),
            share_log: Vec::new(),
        }
    }

    pub fn signature(&self) -> &Signature {
        &self.sig
    }

    pub fn nodes_used(&self) -> u64 {
        self.config.budget_nodes - self.nodes_left
    }

    pub fn calls_used(&self) -> u64 {
        self.config.budget_calls - self.calls_left
    }

    fn tick_node(&mut self) -> Result<(), CombineError> {
        if self.nodes_left == 0 {
            return Err(CombineError::Budget("search nodes"));
        }
        self.nodes_left -= 1;
        Ok(())
    }

    fn tick_call(&mut self) -> Result<(), CombineError> {
        if self.calls_left == 0 {
            return Err(CombineError::Budget("theory-solver calls"));
        }
        self.calls_left -= 1;
        Ok(())
    }

    fn reset_budget(&mut self) {
        self.nodes_left = self.config.budget_nodes;
        self.calls_left = self.config.budget_calls;
    }

    fn coloring(&self, state: &State) -> SymbolColoring {
        classify_symbols(&state.a, &state.b, &self.sig)
    }

    fn strict_constants(&self, state: &State) -> (Vec<String>, Vec<String>) {
        let coloring = self.coloring(state);
        (coloring.constants_with(Color::AStrict), coloring.constants_with(Color::BStrict))
    }

    /// Memoized satisfiability of a pure literal conjunction in one
    /// theory; only misses count against the call budget.
    fn memo_check_sat(&mut self, theory: TheoryId, lits: &[Literal]) -> Result<bool, CombineError> {
        let key = (theory, lits.to_vec());
        if let Some(&hit) = self.check_memo.get(&key) {
            return Ok(hit);
        }
        self.tick_call()?;
        let sat = solver_for(theory).check_sat(lits)?.is_sat();
        self.check_memo.insert(key, sat);
        Ok(sat)
    }

    fn memo_check_diseqs(
        &mut self,
        theory: TheoryId,
        lits: &[Literal],
        pairs: &[(Term, Term)],
    ) -> Result<bool, CombineError> {
        let key = (theory, lits.to_vec(), pairs.to_vec());
        if let Some(&hit) = self.diseq_memo.get(&key) {
            return Ok(hit);
        }
        self.tick_call()?;
        let sat = solver_for(theory).check_sat_with_diseqs(lits, pairs)?.is_sat();
        self.diseq_memo.insert(key, sat);
        Ok(sat)
    }

    fn theories(&self) -> Vec<TheoryId> {
        if self.sig.idl_enabled() {
            vec![TheoryId::Euf, TheoryId::Idl]
        } else {
            vec![TheoryId::Euf]
        }
    }

    /// Computes an interpolant for an unsatisfiable pair, or detects
    /// satisfiability. The tree roots at the original (unpurified) pair.
    pub fn ci_interpolate(
        &mut self,
        a: &FormulaSet,
        b: &FormulaSet,
    ) -> Result<CiOutcome, CombineError> {
        self.reset_budget();
        self.share_log.clear();
        // Reruns on one combiner must not collide with constants declared
        // by earlier runs.
        self.gen = FreshGen::beyond(self.sig.constants());
        let (a1, b1, _trace, chain) = purify(a, b, &mut self.sig, &mut self.gen)?;
        let state = State { a: a1, b: b1, split_done: BTreeSet::new() };
        match self.search(state)? {
            SearchResult::Sat => Ok(CiOutcome::Sat),
            SearchResult::Closed(tip) => {
                let tree = assemble_chain(chain, tip);
                let interpolant = tree.extract_interpolant(&self.sig)?;
                Ok(CiOutcome::Unsat { interpolant, proof: tree })
            }
        }
    }

    fn search(&mut self, state: State) -> Result<SearchResult, CombineError> {
        self.tick_node()?;

        // Closed branch?
        if contains_false(&state.a) {
            return Ok(SearchResult::Closed(ProofTree::leaf(
                state.a,
                state.b,
                MetaRule::Close1,
            )));
        }
        if contains_false(&state.b) {
            return Ok(SearchResult::Closed(ProofTree::leaf(
                state.a,
                state.b,
                MetaRule::Close2,
            )));
        }

        // Split pending negated IDL equalities before consulting the
        // solvers; the IDL core never sees a disequality.
        if self.sig.idl_enabled() {
            for side in [Side::A, Side::B] {
                if let Some(lit) = find_split(&state, side) {
                    return self.apply_split(state, side, lit);
                }
            }
        }

        // Terminate.
        let mut parts: BTreeMap<TheoryId, (Vec<Literal>, Vec<Literal>)> = BTreeMap::new();
        for theory in self.theories() {
            let a_i = side_literals(&state.a, theory);
            let b_i = side_literals(&state.b, theory);
            parts.insert(theory, (a_i, b_i));
        }
        for theory in self.theories() {
            let (a_i, b_i) = &parts[&theory];
            let joint: Vec<Literal> = a_i.iter().chain(b_i.iter()).cloned().collect();
            if !self.memo_check_sat(theory, &joint)? {
                return self.apply_terminate(state, theory, a_i, b_i);
            }
        }

        // Share.
        let (a_strict, b_strict) = self.strict_constants(&state);
        if !a_strict.is_empty() && !b_strict.is_empty() {
            let pairs: Vec<(Term, Term)> = a_strict
                .iter()
                .flat_map(|x| {
                    b_strict.iter().map(move |y| {
                        (Term::constant(x.clone()), Term::constant(y.clone()))
                    })
                })
                .collect();
            for theory in self.theories() {
                let (a_i, b_i) = parts[&theory].clone();
                let joint: Vec<Literal> = a_i.iter().chain(b_i.iter()).cloned().collect();
                if !self.memo_check_diseqs(theory, &joint, &pairs)? {
                    return self.apply_share(state, theory, &a_i, &b_i, &a_strict, &b_strict);
                }
            }
        }

        // Decide, lazily: one relevant atom at a time, so Terminate and
        // Share can close branches long before the side carries a total
        // assignment.
        for side in [Side::A, Side::B] {
            match self.decide_action(&state, side)? {
                None => {}
                Some(DecideAction::Split(atom)) => {
                    return self.apply_atom_split(state, side, atom)
                }
                Some(DecideAction::AddBottom) => {
                    return self.apply_decide_bottom(state, side)
                }
            }
        }

        // No rule applies and ⊥ is absent: the pair is satisfiable.
        if self.config.verify_sat {
            let joint: FormulaSet = state.a.union(&state.b).cloned().collect();
            if self.combined_check_sat_inner(&joint)? != SatCheck::Sat {
                return Err(CombineError::Internal(
                    "exhausted rules on an unsatisfiable pair".to_string(),
                ));
            }
        }
        Ok(SearchResult::Sat)
    }

    fn apply_split(
        &mut self,
        state: State,
        side: Side,
        lit: Literal,
    ) -> Result<SearchResult, CombineError> {
        let Atom::Eq(l, r) = &lit.atom else { unreachable!() };
        let disjuncts = vec![
            Formula::atom(Atom::Lt(l.clone(), r.clone())),
            Formula::atom(Atom::Lt(r.clone(), l.clone())),
        ];
        let mut children = Vec::new();
        for d in &disjuncts {
            let mut next = state.clone();
            next.split_done.insert((side, lit.clone()));
            next.side_mut(side).insert(d.clone());
            match self.search(next)? {
                SearchResult::Sat => return Ok(SearchResult::Sat),
                SearchResult::Closed(tree) => children.push(tree),
            }
        }
        let rule = match side {
            Side::A => MetaRule::Disjunction1 { disjuncts },
            Side::B => MetaRule::Disjunction2 { disjuncts },
        };
        Ok(SearchResult::Closed(ProofTree { a: state.a, b: state.b, rule, children }))
    }

    fn apply_terminate(
        &mut self,
        state: State,
        theory: TheoryId,
        a_i: &[Literal],
        b_i: &[Literal],
    ) -> Result<SearchResult, CombineError> {
        let coloring = self.coloring(&state);
        self.tick_call()?;
        let theta = solver_for(theory).interpolate(a_i, b_i, &coloring)?;
        if coloring.formula_locality(&theta)? != Locality::AbCommon {
            return Err(CombineError::Internal(format!(
                "theory interpolant {theta} is not AB-common"
            )));
        }
        let mut chain = Vec::new();
        let mut cur = state;
        chain.push(ChainStep {
            a: cur.a.clone(),
            b: cur.b.clone(),
            rule: MetaRule::Propagate1 { psi: theta.clone() },
        });
        cur.b.insert(theta);
        chain.push(ChainStep {
            a: cur.a.clone(),
            b: cur.b.clone(),
            rule: MetaRule::Redplus2 { psi: Formula::FALSE },
        });
        cur.b.insert(Formula::FALSE);
        let leaf = ProofTree::leaf(cur.a, cur.b, MetaRule::Close2);
        Ok(SearchResult::Closed(assemble_chain(chain, leaf)))
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_share(
        &mut self,
        state: State,
        theory: TheoryId,
        a_i: &[Literal],
        b_i: &[Literal],
        a_strict: &[String],
        b_strict: &[String],
    ) -> Result<SearchResult, CombineError> {
        let coloring = self.coloring(&state);
        self.tick_call()?;
        let EqualityWitness { terms: witnesses, theta } = solver_for(theory)
            .equality_interpolate(a_i, b_i, a_strict, b_strict, &coloring)?;

        // Witness contract: A_i ∪ B_i entails that some strict constant
        // equals some witness term.
        for v in &witnesses {
            if coloring.term_locality(v)? != Locality::AbCommon {
                return Err(CombineError::Internal(format!(
                    "witness term {v} is not AB-common"
                )));
            }
        }
        let joint: Vec<Literal> = a_i.iter().chain(b_i.iter()).cloned().collect();
        let mut all_pairs = Vec::new();
        for c in a_strict.iter().chain(b_strict) {
            for v in &witnesses {
                all_pairs.push((Term::constant(c.clone()), v.clone()));
            }
        }
        self.tick_call()?;
        if solver_for(theory).check_sat_with_diseqs(&joint, &all_pairs)?.is_sat() {
            return Err(CombineError::Internal(
                "equality witness failed the entailment check".to_string(),
            ));
        }
        if theory == TheoryId::Euf && (witnesses.len() != 1 || theta != Formula::TRUE) {
            return Err(CombineError::Internal(
                "EUF witness must have the convex single-term shape".to_string(),
            ));
        }
        if coloring.formula_locality(&theta)? != Locality::AbCommon {
            return Err(CombineError::Internal(format!("θ = {theta} is not AB-common")));
        }

        let strict_before = a_strict.len() + b_strict.len();
        let event = ShareEvent {
            theory,
            a_lits: a_i.to_vec(),
            b_lits: b_i.to_vec(),
            a_strict: a_strict.to_vec(),
            b_strict: b_strict.to_vec(),
            witnesses: witnesses.clone(),
            theta: theta.clone(),
            strict_before,
            strict_after: 0,
        };

        // Convex case: θ = ⊤ and B alone proves some b_j equal to the
        // witness, so a single-premise case distinction on B suffices and
        // no wrong-guess branches are spawned.
        if theory == TheoryId::Euf {
            let v = &witnesses[0];
            let mut forced_b = None;
            for b in b_strict {
                self.tick_call()?;
                let pair = vec![(Term::constant(b.clone()), v.clone())];
                if !solver_for(theory).check_sat_with_diseqs(b_i, &pair)?.is_sat() {
                    forced_b = Some(b.clone());
                    break;
                }
            }
            let Some(b_j) = forced_b else {
                return Err(CombineError::Internal(
                    "no B-strict constant is pinned to the convex witness".to_string(),
                ));
            };
            let psi = Formula::atom(Atom::Eq(Term::constant(b_j.clone()), v.clone()));
            let mut next = state.clone();
            next.b.insert(psi.clone());
            let (steps, shared) = self.term_share(next, Side::B, &b_j, v)?;
            self.log_share(&event, &shared)?;
            return match self.search(shared)? {
                SearchResult::Sat => Ok(SearchResult::Sat),
                SearchResult::Closed(tree) => Ok(SearchResult::Closed(ProofTree {
                    a: state.a,
                    b: state.b,
                    rule: MetaRule::Disjunction2 { disjuncts: vec![psi] },
                    children: vec![assemble_chain(steps, tree)],
                })),
            };
        }

        // The outer case distinction: one branch per a_q = v_j, plus the
        // θ-branch which in turn distinguishes b_r = v_j.
        let mut a_cases: Vec<(String, Term)> = a_strict
            .iter()
            .flat_map(|c| witnesses.iter().map(move |v| (c.clone(), v.clone())))
            .collect();
        let mut b_cases: Vec<(String, Term)> = b_strict
            .iter()
            .flat_map(|c| witnesses.iter().map(move |v| (c.clone(), v.clone())))
            .collect();
        seeded_shuffle(&mut a_cases, self.config.seed);
        seeded_shuffle(&mut b_cases, self.config.seed.wrapping_add(1));

        let mut disjuncts: Vec<Formula> = a_cases
            .iter()
            .map(|(c, v)| Formula::atom(Atom::Eq(Term::constant(c.clone()), v.clone())))
            .collect();
        disjuncts.push(theta.clone());

        let mut children = Vec::new();
        for (c, v) in &a_cases {
            let psi = Formula::atom(Atom::Eq(Term::constant(c.clone()), v.clone()));
            let mut next = state.clone();
            next.a.insert(psi);
            let (steps, shared) = self.term_share(next, Side::A, c, v)?;
            self.log_share(&event, &shared)?;
            match self.search(shared)? {
                SearchResult::Sat => return Ok(SearchResult::Sat),
                SearchResult::Closed(tree) => children.push(assemble_chain(steps, tree)),
            }
        }

        // θ-branch.
        {
            let mut next = state.clone();
            next.a.insert(theta.clone());
            let mut chain = vec![ChainStep {
                a: next.a.clone(),
                b: next.b.clone(),
                rule: MetaRule::Propagate1 { psi: theta.clone() },
            }];
            next.b.insert(theta.clone());

            let b_disjuncts: Vec<Formula> = b_cases
                .iter()
                .map(|(c, v)| Formula::atom(Atom::Eq(Term::constant(c.clone()), v.clone())))
                .collect();
            let disj2_a = next.a.clone();
            let disj2_b = next.b.clone();
            let mut b_children = Vec::new();
            for (c, v) in &b_cases {
                let psi = Formula::atom(Atom::Eq(Term::constant(c.clone()), v.clone()));
                let mut inner = next.clone();
                inner.b.insert(psi);
                let (steps, shared) = self.term_share(inner, Side::B, c, v)?;
                self.log_share(&event, &shared)?;
                match self.search(shared)? {
                    SearchResult::Sat => return Ok(SearchResult::Sat),
                    SearchResult::Closed(tree) => b_children.push(assemble_chain(steps, tree)),
                }
            }
            let disj2 = ProofTree {
                a: disj2_a,
                b: disj2_b,
                rule: MetaRule::Disjunction2 { disjuncts: b_disjuncts },
                children: b_children,
            };
            children.push(assemble_chain(std::mem::take(&mut chain), disj2));
        }

        Ok(SearchResult::Closed(ProofTree {
            a: state.a,
            b: state.b,
            rule: MetaRule::Disjunction1 { disjuncts },
            children,
        }))
    }

    fn log_share(&mut self, event: &ShareEvent, after_state: &State) -> Result<(), CombineError> {
        let (a_s, b_s) = self.strict_constants(after_state);
        let after = a_s.len() + b_s.len();
        let mut event = event.clone();
        event.strict_after = after;
        self.share_log.push(event);
        if after + 1 != self.share_log.last().unwrap().strict_before {
            return Err(CombineError::Internal(format!(
                "term sharing changed the strict count from {} to {after}",
                self.share_log.last().unwrap().strict_before
            )));
        }
        Ok(())
    }

    /// Renames the strict constant `d` (equated on its side to the
    /// AB-common term `t`) to a fresh shared constant. Emits the chain
    /// Define0 / Redplus / Redminus / Define-elimination and the state
    /// after the rewrite; the strict count drops by one.
    fn term_share(
        &mut self,
        mut state: State,
        side: Side,
        d: &str,
        t: &Term,
    ) -> Result<(Vec<ChainStep>, State), CombineError> {
        let mut chain = Vec::new();
        let d_eq_t = Formula::atom(Atom::Eq(Term::constant(d.to_string()), t.clone()));
        if !state.side(side).contains(&d_eq_t) {
            return Err(CombineError::Internal(format!(
                "term sharing expects {d_eq_t} on side {side}"
            )));
        }

        let fresh = self.gen.fresh();
        self.sig
            .declare_unchecked(&fresh, SymbolKind::Const)
            .map_err(|e| CombineError::Internal(e.to_string()))?;
        let c_eq_t = Formula::atom(Atom::Eq(Term::constant(fresh.clone()), t.clone()));

        // Define0: c = t on both sides.
        chain.push(ChainStep {
            a: state.a.clone(),
            b: state.b.clone(),
            rule: MetaRule::Define0 { name: fresh.clone(), def: t.clone() },
        });
        state.a.insert(c_eq_t.clone());
        state.b.insert(c_eq_t.clone());

        let redplus = |psi: Formula| match side {
            Side::A => MetaRule::Redplus1 { psi },
            Side::B => MetaRule::Redplus2 { psi },
        };
        let redminus = |psi: Formula| match side {
            Side::A => MetaRule::Redminus1 { psi },
            Side::B => MetaRule::Redminus2 { psi },
        };

        // Replace the defining literal d = t by d = c.
        let d_eq_c =
            Formula::atom(Atom::Eq(Term::constant(d.to_string()), Term::constant(fresh.clone())));
        chain.push(ChainStep {
            a: state.a.clone(),
            b: state.b.clone(),
            rule: redplus(d_eq_c.clone()),
        });
        state.side_mut(side).insert(d_eq_c.clone());
        chain.push(ChainStep {
            a: state.a.clone(),
            b: state.b.clone(),
            rule: redminus(d_eq_t.clone()),
        });
        state.side_mut(side).remove(&d_eq_t);

        // Replace d by c everywhere else on its side.
        let mut map = BTreeMap::new();
        map.insert(Term::constant(d.to_string()), Term::constant(fresh.clone()));
        let affected: Vec<Formula> = state
            .side(side)
            .iter()
            .filter(|f| **f != d_eq_c && f.constants().contains(d))
            .cloned()
            .collect();
        for f in &affected {
            let renamed = f.substitute(&map);
            if !state.side(side).contains(&renamed) {
                chain.push(ChainStep {
                    a: state.a.clone(),
                    b: state.b.clone(),
                    rule: redplus(renamed.clone()),
                });
                state.side_mut(side).insert(renamed);
            }
        }
        for f in &affected {
            chain.push(ChainStep {
                a: state.a.clone(),
                b: state.b.clone(),
                rule: redminus(f.clone()),
            });
            state.side_mut(side).remove(f);
        }

        // Delete d = c: read in the root direction this is the Define
        // rule's constant-elimination face, with d fresh for the premise.
        let define = match side {
            Side::A => MetaRule::Define1 {
                name: d.to_string(),
                def: Term::constant(fresh.clone()),
            },
            Side::B => MetaRule::Define2 {
                name: d.to_string(),
                def: Term::constant(fresh.clone()),
            },
        };
        chain.push(ChainStep { a: state.a.clone(), b: state.b.clone(), rule: define });
        state.side_mut(side).remove(&d_eq_c);

        // Rewrite pending-split bookkeeping along with the renaming.
        state.split_done = state
            .split_done
            .iter()
            .map(|(s, lit)| {
                (*s, Literal { positive: lit.positive, atom: lit.atom.substitute(&map) })
            })
            .collect();
        Ok((chain, state))
    }

    /// The relevant atoms of a side, in split order: every atom occurring
    /// in it first (they gate the propositional structure and surface
    /// theory conflicts early), then all equalities between its free
    /// constants (they fix the arrangement the combination argument
    /// needs).
    fn relevant_atoms(&self, set: &FormulaSet) -> Vec<Atom> {
        let mut occurring: BTreeSet<Atom> = BTreeSet::new();
        for f in set {
            f.collect_atoms(&mut occurring);
        }
        let mut pairs: BTreeSet<Atom> = BTreeSet::new();
        let consts = set_constants(set);
        let consts: Vec<&String> = consts.iter().collect();
        for (i, c) in consts.iter().enumerate() {
            for d in consts.iter().skip(i + 1) {
                let atom = Atom::Eq(
                    Term::constant((*c).clone()),
                    Term::constant((*d).clone()),
                );
                if !occurring.contains(&atom) {
                    pairs.insert(atom);
                }
            }
        }
        occurring.into_iter().chain(pairs).collect()
    }

    /// What Decide should do on this side: split an undetermined relevant
    /// atom, add ⊥ when the side is propositionally contradictory, or
    /// nothing when the side already contains one of its assignments.
    fn decide_action(
        &mut self,
        state: &State,
        side: Side,
    ) -> Result<Option<DecideAction>, CombineError> {
        let set = state.side(side);
        // A member already false under the side's own literals makes the
        // side propositionally contradictory; no further splitting needed.
        let mut partial: BTreeMap<Atom, bool> = BTreeMap::new();
        for f in set {
            if let Some(l) = f.as_literal() {
                if matches!(l.atom, Atom::True | Atom::False) {
                    continue;
                }
                if let Some(prev) = partial.insert(l.atom.clone(), l.positive) {
                    if prev != l.positive {
                        return Ok(Some(DecideAction::AddBottom));
                    }
                }
            }
        }
        if set.iter().any(|f| f.eval(&partial) == Some(false)) {
            return Ok(Some(DecideAction::AddBottom));
        }
        let relevant = self.relevant_atoms(set);
        for atom in &relevant {
            if !partial.contains_key(atom) {
                return Ok(Some(DecideAction::Split(atom.clone())));
            }
        }
        if set.iter().all(|f| f.eval(&partial) == Some(true)) {
            Ok(None)
        } else {
            Ok(Some(DecideAction::AddBottom))
        }
    }

    /// Can this polarity of the literal coexist with the side's pure
    /// literals? Checked per theory through the memoized solvers, so a
    /// polarity forced by congruence or offset reasoning never spawns a
    /// branch.
    fn polarity_viable(
        &mut self,
        side_lits: &[Literal],
        lit: &Literal,
    ) -> Result<bool, CombineError> {
        let mut euf: Vec<Literal> = side_lits
            .iter()
            .filter(|l| matches!(l.class(), LiteralClass::Euf | LiteralClass::Shared))
            .cloned()
            .collect();
        if matches!(lit.class(), LiteralClass::Euf | LiteralClass::Shared) {
            euf.push(lit.clone());
        }
        euf.sort();
        if !self.memo_check_sat(TheoryId::Euf, &euf)? {
            return Ok(false);
        }
        if self.sig.idl_enabled() {
            let mut idl: Vec<Literal> = Vec::new();
            let mut diseqs: Vec<(Term, Term)> = Vec::new();
            let push = |l: &Literal, idl: &mut Vec<Literal>, diseqs: &mut Vec<(Term, Term)>| {
                if matches!(l.class(), LiteralClass::Idl | LiteralClass::Shared) {
                    if !l.positive {
                        if let Atom::Eq(x, y) = &l.atom {
                            diseqs.push((x.clone(), y.clone()));
                            return;
                        }
                    }
                    idl.push(l.clone());
                }
            };
            for l in side_lits {
                push(l, &mut idl, &mut diseqs);
            }
            push(lit, &mut idl, &mut diseqs);
            idl.sort();
            diseqs.sort();
            if !self.memo_check_diseqs(TheoryId::Idl, &idl, &diseqs)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Case split on one atom. A polarity whose literal already clashes
    /// with the side's pure literals is dropped (theory-level unit
    /// propagation); the side still entails the remaining disjunction
    /// modulo the combined theory.
    fn apply_atom_split(
        &mut self,
        state: State,
        side: Side,
        atom: Atom,
    ) -> Result<SearchResult, CombineError> {
        let side_lits: Vec<Literal> = state
            .side(side)
            .iter()
            .filter_map(|f| f.as_literal().cloned())
            .collect();
        let mut disjuncts = Vec::new();
        for positive in [true, false] {
            let lit = Literal { positive, atom: atom.clone() };
            let mut probe = side_lits.clone();
            probe.push(lit.clone());
            if cheap_inconsistent(probe.into_iter()) {
                continue;
            }
            if self.polarity_viable(&side_lits, &lit)? {
                disjuncts.push(Formula::Lit(lit));
            }
        }
        if disjuncts.is_empty() {
            return Err(CombineError::Internal(format!(
                "both polarities of {atom} conflict with a side the solvers accepted"
            )));
        }
        let mut children = Vec::new();
        for d in &disjuncts {
            let mut next = state.clone();
            next.side_mut(side).insert(d.clone());
            match self.search(next)? {
                SearchResult::Sat => return Ok(SearchResult::Sat),
                SearchResult::Closed(tree) => children.push(tree),
            }
        }
        let rule = match side {
            Side::A => MetaRule::Disjunction1 { disjuncts },
            Side::B => MetaRule::Disjunction2 { disjuncts },
        };
        Ok(SearchResult::Closed(ProofTree { a: state.a, b: state.b, rule, children }))
    }

    fn apply_decide_bottom(
        &mut self,
        state: State,
        side: Side,
    ) -> Result<SearchResult, CombineError> {
        let redplus = |psi: Formula| match side {
            Side::A => MetaRule::Redplus1 { psi },
            Side::B => MetaRule::Redplus2 { psi },
        };
        let mut next = state.clone();
        let chain = vec![ChainStep {
            a: state.a.clone(),
            b: state.b.clone(),
            rule: redplus(Formula::FALSE),
        }];
        next.side_mut(side).insert(Formula::FALSE);
        match self.search(next)? {
            SearchResult::Sat => Ok(SearchResult::Sat),
            SearchResult::Closed(tree) => Ok(SearchResult::Closed(assemble_chain(chain, tree))),
        }
    }

    /// Quick theory-level inconsistency test for a literal conjunction,
    /// used to drop Decide branches that no model can realize. Dropping a
    /// theory-inconsistent disjunct keeps the side's entailment of the
    /// remaining disjunction intact.
    fn quick_inconsistent(&mut self, lits: &[Literal]) -> Result<bool, CombineError> {
        let euf: Vec<Literal> = lits
            .iter()
            .filter(|l| matches!(l.class(), LiteralClass::Euf | LiteralClass::Shared))
            .cloned()
            .collect();
        self.tick_call()?;
        if !solver_for(TheoryId::Euf).check_sat(&euf)?.is_sat() {
            return Ok(true);
        }
        if self.sig.idl_enabled() {
            let mut idl: Vec<Literal> = Vec::new();
            let mut diseqs: Vec<(Term, Term)> = Vec::new();
            for l in lits {
                match l.class() {
                    LiteralClass::Idl | LiteralClass::Shared => {
                        if !l.positive {
                            if let Atom::Eq(x, y) = &l.atom {
                                diseqs.push((x.clone(), y.clone()));
                                continue;
                            }
                        }
                        idl.push(l.clone());
                    }
                    _ => {}
                }
            }
            self.tick_call()?;
            if !solver_for(TheoryId::Idl)
                .check_sat_with_diseqs(&idl, &diseqs)?
                .is_sat()
            {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// All boolean assignments over the relevant atoms that satisfy the
    /// side propositionally and survive the per-theory consistency test.
    fn enumerate_assignments(
        &mut self,
        set: &FormulaSet,
        relevant: &[Atom],
    ) -> Result<Vec<Assignment>, CombineError> {
        // Literal members force their atoms.
        let mut forced: BTreeMap<Atom, bool> = BTreeMap::new();
        for f in set {
            if let Some(l) = f.as_literal() {
                if matches!(l.atom, Atom::True | Atom::False) {
                    continue;
                }
                if let Some(prev) = forced.insert(l.atom.clone(), l.positive) {
                    if prev != l.positive {
                        return Ok(vec![]);
                    }
                }
            }
        }
        let free: Vec<&Atom> = relevant.iter().filter(|a| !forced.contains_key(*a)).collect();

        let mut out = Vec::new();
        let mut partial = forced.clone();
        self.assign_rec(set, &free, 0, &mut partial, &mut out)?;
        Ok(out)
    }

    fn assign_rec(
        &mut self,
        set: &FormulaSet,
        free: &[&Atom],
        i: usize,
        partial: &mut BTreeMap<Atom, bool>,
        out: &mut Vec<Assignment>,
    ) -> Result<(), CombineError> {
        // Prune on a falsified member or an equality-closure conflict.
        if set.iter().any(|f| f.eval(partial) == Some(false)) {
            return Ok(());
        }
        if cheap_inconsistent(
            partial.iter().map(|(atom, &positive)| Literal { positive, atom: atom.clone() }),
        ) {
            return Ok(());
        }
        if i == free.len() {
            let assignment = Assignment { values: partial.clone() };
            if !self.quick_inconsistent(&assignment.literals())? {
                out.push(assignment);
            }
            return Ok(());
        }
        for value in [true, false] {
            partial.insert(free[i].clone(), value);
            self.assign_rec(set, free, i + 1, partial, out)?;
        }
        partial.remove(free[i]);
        Ok(())
    }

    /// The Decide transformation in its one-shot shape: all boolean
    /// assignments to the side's relevant atoms satisfying it, each the
    /// seed of one successor. The search reaches the same leaves through
    /// single-atom splits so that closing rules apply as early as
    /// possible; this entry point exists for direct use and testing.
    pub fn decide(&mut self, side_set: &FormulaSet) -> Result<Vec<Assignment>, CombineError> {
        let relevant = self.relevant_atoms(side_set);
        self.enumerate_assignments(side_set, &relevant)
    }

    /// Combined satisfiability via purification and arrangement guessing:
    /// a set is satisfiable iff some boolean assignment and some ordered
    /// partition of the constants shared between the two pure parts make
    /// both parts satisfiable.
    pub fn combined_check_sat(&mut self, set: &FormulaSet) -> Result<SatCheck, CombineError> {
        self.reset_budget();
        self.combined_check_sat_inner(set)
    }

    fn combined_check_sat_inner(&mut self, set: &FormulaSet) -> Result<SatCheck, CombineError> {
        if contains_false(set) {
            return Ok(SatCheck::Unsat);
        }
        let mut sig = self.sig.clone();
        let set_consts = set_constants(set);
        let mut gen = FreshGen::beyond(
            sig.constants().chain(set_consts.iter().map(String::as_str)),
        );
        let (pure, _, _, _) = purify_unchecked(set, &FormulaSet::new(), &mut sig, &mut gen)?;

        // Enumerate propositional assignments over the occurring atoms.
        let mut atoms = BTreeSet::new();
        for f in &pure {
            f.collect_atoms(&mut atoms);
        }
        let mut forced: BTreeMap<Atom, bool> = BTreeMap::new();
        for f in &pure {
            if let Some(l) = f.as_literal() {
                if matches!(l.atom, Atom::True | Atom::False) {
                    continue;
                }
                if let Some(prev) = forced.insert(l.atom.clone(), l.positive) {
                    if prev != l.positive {
                        return Ok(SatCheck::Unsat);
                    }
                }
            }
        }
        let free: Vec<&Atom> = atoms.iter().filter(|a| !forced.contains_key(*a)).collect();
        let mut partial = forced.clone();
        if self.sat_assignment_rec(&pure, &free, 0, &mut partial)? {
            Ok(SatCheck::Sat)
        } else {
            Ok(SatCheck::Unsat)
        }
    }

    fn sat_assignment_rec(
        &mut self,
        set: &FormulaSet,
        free: &[&Atom],
        i: usize,
        partial: &mut BTreeMap<Atom, bool>,
    ) -> Result<bool, CombineError> {
        if set.iter().any(|f| f.eval(partial) == Some(false)) {
            return Ok(false);
        }
        let lits: Vec<Literal> = partial
            .iter()
            .map(|(atom, &positive)| Literal { positive, atom: atom.clone() })
            .collect();
        if cheap_inconsistent(lits.iter().cloned()) {
            return Ok(false);
        }
        // An already-contradictory prefix cannot be extended to a model;
        // the memo keeps repeated prefixes cheap.
        if !self.no_check_parts(&lits)? {
            return Ok(false);
        }
        if i == free.len() {
            return self.no_check(&lits);
        }
        for value in [true, false] {
            partial.insert(free[i].clone(), value);
            if self.sat_assignment_rec(set, free, i + 1, partial)? {
                partial.remove(free[i]);
                return Ok(true);
            }
        }
        partial.remove(free[i]);
        Ok(false)
    }

    /// Nelson-Oppen check for a conjunction of pure literals.
    fn no_check(&mut self, lits: &[Literal]) -> Result<bool, CombineError> {
        if let Some(&hit) = self.no_memo.get(lits) {
            return Ok(hit);
        }
        let verdict = self.no_check_uncached(lits, true)?;
        self.no_memo.insert(lits.to_vec(), verdict);
        Ok(verdict)
    }

    /// Each theory part checked alone, without arrangement guessing: a
    /// cheap and sound unsat filter for partial assignments.
    fn no_check_parts(&mut self, lits: &[Literal]) -> Result<bool, CombineError> {
        if let Some(&hit) = self.parts_memo.get(lits) {
            return Ok(hit);
        }
        let verdict = self.no_check_uncached(lits, false)?;
        self.parts_memo.insert(lits.to_vec(), verdict);
        Ok(verdict)
    }

    fn no_check_uncached(&mut self, lits: &[Literal], full: bool) -> Result<bool, CombineError> {
        let mut euf: Vec<Literal> = Vec::new();
        let mut idl: Vec<Literal> = Vec::new();
        let mut idl_diseqs: Vec<(Term, Term)> = Vec::new();
        for l in lits {
            match l.class() {
                LiteralClass::Euf => euf.push(l.clone()),
                LiteralClass::Idl => {
                    if !l.positive {
                        if let Atom::Eq(x, y) = &l.atom {
                            idl_diseqs.push((x.clone(), y.clone()));
                            continue;
                        }
                    }
                    idl.push(l.clone());
                }
                LiteralClass::Shared => {
                    euf.push(l.clone());
                    if !l.positive {
                        if let Atom::Eq(x, y) = &l.atom {
                            idl_diseqs.push((x.clone(), y.clone()));
                            continue;
                        }
                    }
                    idl.push(l.clone());
                }
                LiteralClass::Mixed => {
                    return Err(CombineError::Internal(format!(
                        "mixed literal {l} after purification"
                    )))
                }
            }
        }

        // Each part alone first.
        self.tick_call()?;
        if !solver_for(TheoryId::Euf).check_sat(&euf)?.is_sat() {
            return Ok(false);
        }
        let idl_active = self.sig.idl_enabled() || !idl.is_empty() || !idl_diseqs.is_empty();
        if idl_active {
            self.tick_call()?;
            if !solver_for(TheoryId::Idl)
                .check_sat_with_diseqs(&idl, &idl_diseqs)?
                .is_sat()
            {
                return Ok(false);
            }
        } else {
            return Ok(true);
        }

        if !full {
            return Ok(true);
        }

        // Constants visible to both parts need an arrangement.
        let consts_of = |ls: &[Literal]| {
            let mut out = BTreeSet::new();
            for l in ls {
                l.atom.collect_constants(&mut out);
            }
            out
        };
        let mut idl_consts = consts_of(&idl);
        for (x, y) in &idl_diseqs {
            x.collect_constants(&mut idl_consts);
            y.collect_constants(&mut idl_consts);
        }
        let shared: Vec<String> =
            consts_of(&euf).intersection(&idl_consts).cloned().collect();
        if shared.is_empty() {
            return Ok(true);
        }

        // Ordered partitions of the shared constants: blocks are equal,
        // adjacent blocks strictly increase.
        self.ordered_partitions(&shared, &euf, &idl, &idl_diseqs)
    }

    fn ordered_partitions(
        &mut self,
        shared: &[String],
        euf: &[Literal],
        idl: &[Literal],
        idl_diseqs: &[(Term, Term)],
    ) -> Result<bool, CombineError> {
        fn rec(
            this: &mut Combiner,
            shared: &[String],
            i: usize,
            blocks: &mut Vec<Vec<String>>,
            euf: &[Literal],
            idl: &[Literal],
            idl_diseqs: &[(Term, Term)],
        ) -> Result<bool, CombineError> {
            if i == shared.len() {
                return this.arrangement_sat(blocks, euf, idl, idl_diseqs);
            }
            let c = shared[i].clone();
            // Join an existing block.
            for k in 0..blocks.len() {
                blocks[k].push(c.clone());
                if rec(this, shared, i + 1, blocks, euf, idl, idl_diseqs)? {
                    return Ok(true);
                }
                blocks[k].pop();
            }
            // Open a new block at every possible rank.
            for k in 0..=blocks.len() {
                blocks.insert(k, vec![c.clone()]);
                if rec(this, shared, i + 1, blocks, euf, idl, idl_diseqs)? {
                    return Ok(true);
                }
                blocks.remove(k);
            }
            Ok(false)
        }
        let mut blocks = Vec::new();
        rec(self, shared, 0, &mut blocks, euf, idl, idl_diseqs)
    }

    fn arrangement_sat(
        &mut self,
        blocks: &[Vec<String>],
        euf: &[Literal],
        idl: &[Literal],
        idl_diseqs: &[(Term, Term)],
    ) -> Result<bool, CombineError> {
        let mut euf_all = euf.to_vec();
        let mut idl_all = idl.to_vec();
        let diseqs = idl_diseqs.to_vec();
        for (k, block) in blocks.iter().enumerate() {
            let rep = &block[0];
            for c in &block[1..] {
                let eq = Atom::Eq(Term::constant(rep.clone()), Term::constant(c.clone()));
                euf_all.push(Literal::pos(eq.clone()));
                idl_all.push(Literal::pos(eq));
            }
            if k + 1 < blocks.len() {
                let next_rep = &blocks[k + 1][0];
                idl_all.push(Literal::pos(Atom::Lt(
                    Term::constant(rep.clone()),
                    Term::constant(next_rep.clone()),
                )));
            }
            for other in blocks.iter().skip(k + 1) {
                for c in block {
                    for d in other {
                        euf_all.push(Literal::neg(Atom::Eq(
                            Term::constant(c.clone()),
                            Term::constant(d.clone()),
                        )));
                    }
                }
            }
        }
        if cheap_inconsistent(euf_all.iter().chain(idl_all.iter()).cloned()) {
            return Ok(false);
        }
        self.tick_call()?;
        if !solver_for(TheoryId::Euf).check_sat(&euf_all)?.is_sat() {
            return Ok(false);
        }
        self.tick_call()?;
        if !solver_for(TheoryId::Idl)
            .check_sat_with_diseqs(&idl_all, &diseqs)?
            .is_sat()
        {
            return Ok(false);
        }
        Ok(true)
    }

    /// Checks the three interpolant conditions for (A, B, θ).
    pub fn verify_interpolant(
        &mut self,
        a: &FormulaSet,
        b: &FormulaSet,
        theta: &Formula,
    ) -> Result<VerifyReport, CombineError> {
        self.reset_budget();
        let mut a_side = a.clone();
        a_side.insert(Formula::not(theta.clone()));
        let a_entails = self.combined_check_sat_inner(&a_side)? == SatCheck::Unsat;
        let mut b_side = b.clone();
        b_side.insert(theta.clone());
        let b_refuted = self.combined_check_sat_inner(&b_side)? == SatCheck::Unsat;
        let coloring = classify_symbols(a, b, &self.sig);
        let common = coloring.formula_locality(theta).map(|l| l == Locality::AbCommon)
            .unwrap_or(false);
        Ok(VerifyReport { a_entails, b_refuted, common })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn set(fs: Vec<Formula>) -> FormulaSet {
        fs.into_iter().collect()
    }

    fn eq(l: Term, r: Term) -> Formula {
        Formula::atom(Atom::Eq(l, r))
    }

    fn lt(l: Term, r: Term) -> Formula {
        Formula::atom(Atom::Lt(l, r))
    }

    fn idl_sig() -> Signature {
        let mut sig = Signature::new();
        sig.enable_idl();
        sig
    }

    fn euf_sig(funcs: &[(&str, usize)]) -> Signature {
        let mut sig = Signature::new();
        for (f, n) in funcs {
            sig.declare(f, SymbolKind::Func { theory: TheoryId::Euf, arity: *n }).unwrap();
        }
        sig
    }


    fn expect_verified(sig: &Signature, a: FormulaSet, b: FormulaSet) -> Formula {
        let mut combiner = Combiner::new(sig, Config::default());
        match combiner.ci_interpolate(&a, &b).unwrap() {
            CiOutcome::Unsat { interpolant, .. } => {
                let report =
                    combiner.verify_interpolant(&a, &b, &interpolant.formula).unwrap();
                assert!(report.passed(), "verification failed: {report:?}");
                interpolant.formula
            }
            CiOutcome::Sat => panic!("expected unsat"),
        }
    }

    #[test]
    fn idl_opposing_bounds() {
        let sig = idl_sig();
        let a = set(vec![lt(c("x"), c("y"))]);
        let b = set(vec![lt(c("y"), c("x"))]);
        let theta = expect_verified(&sig, a, b);
        assert_eq!(theta, lt(c("x"), c("y")));
    }

    #[test]
    fn euf_congruence_conflict() {
        let sig = euf_sig(&[("f", 1)]);
        let a = set(vec![eq(c("a"), c("b"))]);
        let b = set(vec![Formula::negated_atom(Atom::Eq(
            Term::app("f", vec![c("a")]),
            Term::app("f", vec![c("b")]),
        ))]);
        let theta = expect_verified(&sig, a, b);
        assert_eq!(theta, eq(c("a"), c("b")));
    }

    #[test]
    fn flagship_mixed_problem() {
        // A = {a = f(x), z = succ(a)}, B = {b = f(x), z ≠ succ(b)}.
        let mut sig = euf_sig(&[("f", 1)]);
        sig.enable_idl();
        let a = set(vec![
            eq(c("a"), Term::app("f", vec![c("x")])),
            eq(c("z"), Term::succ(c("a"))),
        ]);
        let b = set(vec![
            eq(c("b"), Term::app("f", vec![c("x")])),
            Formula::negated_atom(Atom::Eq(c("z"), Term::succ(c("b")))),
        ]);
        let theta = expect_verified(&sig, a.clone(), b.clone());
        // The interpolant must be equivalent to z = succ(f(x)): check both
        // entailment directions through the combined engine.
        let mut combiner = Combiner::new(&sig, Config::default());
        let target = eq(c("z"), Term::succ(Term::app("f", vec![c("x")])));
        let mut one = FormulaSet::new();
        one.insert(theta.clone());
        one.insert(Formula::not(target.clone()));
        assert_eq!(combiner.combined_check_sat(&one).unwrap(), SatCheck::Unsat);
        let mut two = FormulaSet::new();
        two.insert(target);
        two.insert(Formula::not(theta));
        assert_eq!(combiner.combined_check_sat(&two).unwrap(), SatCheck::Unsat);
    }

    #[test]
    fn sat_verdict_disjoint_predicates() {
        let mut sig = euf_sig(&[]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        sig.declare("Q", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let a = set(vec![Formula::atom(Atom::Pred("P".into(), vec![c("c")]))]);
        let b = set(vec![Formula::negated_atom(Atom::Pred("Q".into(), vec![c("c")]))]);
        let mut combiner = Combiner::new(&sig, Config { verify_sat: true, ..Config::default() });
        assert!(matches!(combiner.ci_interpolate(&a, &b).unwrap(), CiOutcome::Sat));
    }

    #[test]
    fn combined_check_sat_examples() {
        let mut sig = euf_sig(&[("f", 1)]);
        sig.enable_idl();
        let mut combiner = Combiner::new(&sig, Config::default());
        // {a=b, f(a) ≠ f(b)} unsat
        let s1 = set(vec![
            eq(c("a"), c("b")),
            Formula::negated_atom(Atom::Eq(
                Term::app("f", vec![c("a")]),
                Term::app("f", vec![c("b")]),
            )),
        ]);
        assert_eq!(combiner.combined_check_sat(&s1).unwrap(), SatCheck::Unsat);
        // {x<y, y<z, a=x, a=z} unsat: forces x=z with x<z
        let s2 = set(vec![
            lt(c("x"), c("y")),
            lt(c("y"), c("z")),
            eq(c("a"), c("x")),
            eq(c("a"), c("z")),
        ]);
        assert_eq!(combiner.combined_check_sat(&s2).unwrap(), SatCheck::Unsat);
        // {x<y} sat
        let s3 = set(vec![lt(c("x"), c("y"))]);
        assert_eq!(combiner.combined_check_sat(&s3).unwrap(), SatCheck::Sat);
    }

    #[test]
    fn verify_rejects_bad_interpolants() {
        let sig = idl_sig();
        let a = set(vec![lt(c("x"), c("y"))]);
        let b = set(vec![lt(c("y"), c("x"))]);
        let mut combiner = Combiner::new(&sig, Config::default());
        // θ = ⊥ with satisfiable A: condition (i) fails.
        let report = combiner.verify_interpolant(&a, &b, &Formula::FALSE).unwrap();
        assert!(!report.a_entails && report.b_refuted);
        // θ mentioning an A-strict constant... x is common here, so use a
        // fresh one-sided constant.
        let a2 = set(vec![lt(c("x"), c("y")), lt(c("w"), c("x"))]);
        let theta = lt(c("w"), c("y"));
        let report = combiner.verify_interpolant(&a2, &b, &theta).unwrap();
        assert!(!report.common);
    }

    #[test]
    fn budget_exhaustion_reported() {
        let sig = idl_sig();
        let a = set(vec![lt(c("x"), c("y"))]);
        let b = set(vec![lt(c("y"), c("x"))]);
        let mut combiner =
            Combiner::new(&sig, Config { budget_nodes: 0, ..Config::default() });
        assert!(matches!(
            combiner.ci_interpolate(&a, &b),
            Err(CombineError::Budget(_))
        ));
    }

    #[test]
    fn share_fires_on_forced_euf_equality() {
        // EUF forces a = b (both equal f(x)); only IDL sees the clash
        // z < a vs b < z, so the equality must be shared across theories.
        let mut sig = euf_sig(&[("f", 1)]);
        sig.enable_idl();
        let f = |t: Term| Term::app("f", vec![t]);
        let a = set(vec![eq(c("a"), f(c("x"))), lt(c("z"), c("a"))]);
        let b = set(vec![eq(c("b"), f(c("x"))), lt(c("b"), c("z"))]);
        let mut combiner = Combiner::new(&sig, Config::default());
        match combiner.ci_interpolate(&a, &b).unwrap() {
            CiOutcome::Unsat { interpolant, .. } => {
                assert!(!combiner.share_log.is_empty(), "Share never fired");
                let report =
                    combiner.verify_interpolant(&a, &b, &interpolant.formula).unwrap();
                assert!(report.passed());
            }
            CiOutcome::Sat => panic!("expected unsat"),
        }
    }

    #[test]
    fn idl_share_with_offset_witness() {
        // A = {a = succ(x), P(a)}, B = {b = succ(x), ¬P(b)}.
        let mut sig = euf_sig(&[]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        sig.enable_idl();
        let a = set(vec![
            eq(c("a"), Term::succ(c("x"))),
            Formula::atom(Atom::Pred("P".into(), vec![c("a")])),
        ]);
        let b = set(vec![
            eq(c("b"), Term::succ(c("x"))),
            Formula::negated_atom(Atom::Pred("P".into(), vec![c("b")])),
        ]);
        let mut combiner = Combiner::new(&sig, Config::default());
        match combiner.ci_interpolate(&a, &b).unwrap() {
            CiOutcome::Unsat { interpolant, .. } => {
                let report =
                    combiner.verify_interpolant(&a, &b, &interpolant.formula).unwrap();
                assert!(report.passed(), "{report:?} for {}", interpolant.formula);
            }
            CiOutcome::Sat => panic!("expected unsat"),
        }
    }

    #[test]
    fn boolean_structure_via_decide() {
        // A = {P(a) ∨ a = x, ¬P(a)}, B = {x ≠ a}... over constants only,
        // declared через EUF preds.
        let mut sig = euf_sig(&[]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let a = set(vec![
            Formula::or(vec![
                Formula::atom(Atom::Pred("P".into(), vec![c("a")])),
                eq(c("a"), c("x")),
            ]),
            Formula::negated_atom(Atom::Pred("P".into(), vec![c("a")])),
        ]);
        let b = set(vec![Formula::negated_atom(Atom::Eq(c("x"), c("a")))]);
        // x and a are both common here (both occur in B), so this is
        // decidable without Share.
        let theta = expect_verified(&sig, a, b);
        let mut combiner = Combiner::new(&sig, Config::default());
        let mut probe = FormulaSet::new();
        probe.insert(theta);
        probe.insert(Formula::negated_atom(Atom::Eq(c("a"), c("x"))));
        assert_eq!(combiner.combined_check_sat(&probe).unwrap(), SatCheck::Unsat);
    }

    #[test]
    fn proof_tree_locally_sound() {
        let mut sig = euf_sig(&[("f", 1)]);
        sig.enable_idl();
        let a = set(vec![
            eq(c("a"), Term::app("f", vec![c("x")])),
            eq(c("z"), Term::succ(c("a"))),
        ]);
        let b = set(vec![
            eq(c("b"), Term::app("f", vec![c("x")])),
            Formula::negated_atom(Atom::Eq(c("z"), Term::succ(c("b")))),
        ]);
        let mut combiner = Combiner::new(&sig, Config::default());
        let CiOutcome::Unsat { proof, .. } = combiner.ci_interpolate(&a, &b).unwrap() else {
            panic!("expected unsat");
        };
        let sig2 = combiner.signature().clone();
        let mut checker = Combiner::new(&sig2, Config::default());
        for node in proof.nodes() {
            let ok = node
                .check_local_soundness(&sig2, &mut |set| {
                    checker
                        .combined_check_sat(set)
                        .map(|v| v.is_sat())
                        .map_err(|e| e.to_string())
                })
                .unwrap();
            assert!(ok, "unsound node: {}", node.rule.tag());
        }
    }

    #[test]
    fn decide_enumerates_satisfying_assignments() {
        // X = {P(a) ∨ a = c}: three assignments over {P(a), a=c}.
        let mut sig = euf_sig(&[]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let x = set(vec![Formula::or(vec![
            Formula::atom(Atom::Pred("P".into(), vec![c("a")])),
            eq(c("a"), c("c")),
        ])]);
        let mut combiner = Combiner::new(&sig, Config::default());
        let mut got: Vec<Vec<(String, bool)>> = combiner
            .decide(&x)
            .unwrap()
            .into_iter()
            .map(|a| {
                a.values
                    .iter()
                    .map(|(atom, v)| (atom.to_string(), *v))
                    .collect()
            })
            .collect();
        got.sort();
        let atom_p = "(P a)".to_string();
        let atom_eq = "(= a c)".to_string();
        let mut want = vec![
            vec![(atom_eq.clone(), true), (atom_p.clone(), true)],
            vec![(atom_eq.clone(), false), (atom_p.clone(), true)],
            vec![(atom_eq.clone(), true), (atom_p.clone(), false)],
        ];
        want.iter_mut().for_each(|v| v.sort());
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn decide_empty_on_propositional_conflict() {
        let mut sig = euf_sig(&[]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let x = set(vec![
            Formula::atom(Atom::Pred("P".into(), vec![c("a")])),
            Formula::negated_atom(Atom::Pred("P".into(), vec![c("a")])),
        ]);
        let mut combiner = Combiner::new(&sig, Config::default());
        assert!(combiner.decide(&x).unwrap().is_empty());
    }

    #[test]
    fn combiner_is_reusable_across_runs() {
        let mut sig = euf_sig(&[("f", 1)]);
        sig.enable_idl();
        let a = set(vec![eq(c("z"), Term::succ(Term::app("f", vec![c("x")])))]);
        let b = set(vec![Formula::negated_atom(Atom::Eq(
            c("z"),
            Term::succ(Term::app("f", vec![c("x")])),
        ))]);
        let mut combiner = Combiner::new(&sig, Config::default());
        for _ in 0..3 {
            let CiOutcome::Unsat { interpolant, .. } =
                combiner.ci_interpolate(&a, &b).unwrap()
            else {
                panic!("expected unsat");
            };
            let report = combiner.verify_interpolant(&a, &b, &interpolant.formula).unwrap();
            assert!(report.passed());
        }
    }

    #[test]
    fn seed_changes_nothing_semantically() {
        let mut sig = euf_sig(&[("f", 1)]);
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let f = |t: Term| Term::app("f", vec![t]);
        let a = set(vec![
            eq(c("a"), f(c("x"))),
            Formula::atom(Atom::Pred("P".into(), vec![c("a")])),
        ]);
        let b = set(vec![
            eq(c("b"), f(c("x"))),
            Formula::negated_atom(Atom::Pred("P".into(), vec![c("b")])),
        ]);
        for seed in [0, 1, 42] {
            let mut combiner =
                Combiner::new(&sig, Config { seed, ..Config::default() });
            let CiOutcome::Unsat { interpolant, .. } =
                combiner.ci_interpolate(&a, &b).unwrap()
            else {
                panic!("expected unsat");
            };
            let report =
                combiner.verify_interpolant(&a, &b, &interpolant.formula).unwrap();
            assert!(report.passed());
        }
    }
}
