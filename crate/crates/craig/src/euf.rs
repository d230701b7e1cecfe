//! Ground equality with uninterpreted functions: congruence closure over
//! an e-graph, unsat cores from an explanation forest, interpolation, and
//! convex equality witnesses.
//!
//! Predicate atoms `P(t̄)` are encoded as equations `$P(t̄) = $true` with
//! reserved names, so closure treats them uniformly; the encoding never
//! leaks into returned formulas.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::color::{Locality, SymbolColoring};
use crate::term::{Atom, Formula, Literal, Term};

const PRED_FN_PREFIX: &str = "$p$";
const PRED_TRUE: &str = "$true";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EufError {
    #[error("literal `{0}` is not a pure EUF literal")]
    NotEuf(String),
    #[error("interpolation precondition violated: the literal sets are jointly satisfiable")]
    NotUnsat,
    #[error("interpolant check failed: {0}")]
    InterpolantCheck(String),
    #[error("no AB-common witness term exists for the forced equality {0} = {1}")]
    NoCommonWitness(String, String),
    #[error("equality-witness precondition violated: {0}")]
    WitnessPrecondition(String),
    #[error("coloring lookup failed: {0}")]
    Coloring(#[from] crate::color::ColoringError),
}

/// Why two e-graph nodes were merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    /// Index of the input literal asserting the equality.
    Input(usize),
    /// Congruence step: the nodes are applications with pairwise-equal
    /// arguments.
    Congruence,
}

/// One step of an explanation path between two equal nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplainStep {
    pub left: usize,
    pub right: usize,
    pub reason: Reason,
}

/// Union-find over term nodes with a congruence table and an explanation
/// forest.
#[derive(Debug, Default, Clone)]
pub struct EGraph {
    terms: Vec<Term>,
    ids: HashMap<Term, usize>,
    parent: Vec<usize>,
    rank: Vec<u32>,
    proof_parent: Vec<Option<(usize, Reason)>>,
    apps: Vec<usize>,
}

impl EGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(&self, id: usize) -> &Term {
        &self.terms[id]
    }

    pub fn add(&mut self, t: &Term) -> usize {
        if let Some(&id) = self.ids.get(t) {
            return id;
        }
        if let Term::App(_, args) = t {
            for a in args {
                self.add(a);
            }
        }
        let id = self.terms.len();
        self.terms.push(t.clone());
        self.ids.insert(t.clone(), id);
        self.parent.push(id);
        self.rank.push(0);
        self.proof_parent.push(None);
        if matches!(t, Term::App(..)) {
            self.apps.push(id);
        }
        id
    }

    pub fn lookup(&self, t: &Term) -> Option<usize> {
        self.ids.get(t).copied()
    }

    pub fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    pub fn same_class(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }

    /// Reverses the proof-forest path from `x` to its proof root, so `x`
    /// becomes the root of its proof tree.
    fn reroot_proof(&mut self, x: usize) {
        let mut prev: Option<(usize, Reason)> = None;
        let mut cur = x;
        loop {
            let next = self.proof_parent[cur];
            self.proof_parent[cur] = prev;
            match next {
                None => break,
                Some((p, r)) => {
                    prev = Some((cur, r));
                    cur = p;
                }
            }
        }
    }

    pub fn merge(&mut self, x: usize, y: usize, reason: Reason) -> bool {
        let (rx, ry) = (self.find(x), self.find(y));
        if rx == ry {
            return false;
        }
        self.reroot_proof(x);
        self.proof_parent[x] = Some((y, reason));
        if self.rank[rx] < self.rank[ry] {
            self.parent[rx] = ry;
        } else if self.rank[rx] > self.rank[ry] {
            self.parent[ry] = rx;
        } else {
            self.parent[ry] = rx;
            self.rank[rx] += 1;
        }
        true
    }

    /// Scans application pairs and merges congruent ones until no merge
    /// fires. Quadratic, which is fine at the sizes the combiner produces.
    pub fn congruence_fixpoint(&mut self) {
        loop {
            let mut merged = false;
            for ai in 0..self.apps.len() {
                for bi in ai + 1..self.apps.len() {
                    let (i, j) = (self.apps[ai], self.apps[bi]);
                    if self.same_class(i, j) {
                        continue;
                    }
                    let congruent = {
                        let (Term::App(f, fa), Term::App(g, ga)) =
                            (&self.terms[i].clone(), &self.terms[j].clone())
                        else {
                            unreachable!()
                        };
                        f == g && fa.len() == ga.len() && {
                            let pairs: Vec<(usize, usize)> = fa
                                .iter()
                                .zip(ga)
                                .map(|(s, t)| (self.ids[s], self.ids[t]))
                                .collect();
                            pairs.iter().all(|&(s, t)| self.same_class(s, t))
                        }
                    };
                    if congruent {
                        self.merge(i, j, Reason::Congruence);
                        merged = true;
                    }
                }
            }
            if !merged {
                break;
            }
        }
    }

    /// Path of proof-forest edges connecting two nodes of one class.
    pub fn explain(&mut self, x: usize, y: usize) -> Vec<ExplainStep> {
        assert!(self.same_class(x, y), "explain on distinct classes");
        let path_to_root = |g: &EGraph, mut v: usize| {
            let mut path = vec![v];
            while let Some((p, _)) = g.proof_parent[v] {
                v = p;
                path.push(v);
            }
            path
        };
        let px = path_to_root(self, x);
        let py = path_to_root(self, y);
        let on_py: HashMap<usize, usize> = py.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let (meet_x, meet_y) = px
            .iter()
            .enumerate()
            .find_map(|(i, v)| on_py.get(v).map(|&j| (i, j)))
            .expect("same class implies a common proof ancestor");
        let mut steps = Vec::new();
        for &node in &px[..meet_x] {
            let (p, r) = self.proof_parent[node].unwrap();
            steps.push(ExplainStep { left: node, right: p, reason: r });
        }
        for j in (0..meet_y).rev() {
            let (p, r) = self.proof_parent[py[j]].unwrap();
            steps.push(ExplainStep { left: p, right: py[j], reason: r });
        }
        steps
    }

    /// Input literal indices supporting `x = y`, congruence steps expanded
    /// recursively.
    pub fn explain_inputs(&mut self, x: usize, y: usize, out: &mut BTreeSet<usize>) {
        for step in self.explain(x, y) {
            match step.reason {
                Reason::Input(i) => {
                    out.insert(i);
                }
                Reason::Congruence => {
                    let (Term::App(_, fa), Term::App(_, ga)) =
                        (self.terms[step.left].clone(), self.terms[step.right].clone())
                    else {
                        unreachable!()
                    };
                    for (s, t) in fa.iter().zip(&ga) {
                        let (si, ti) = (self.ids[s], self.ids[t]);
                        self.explain_inputs(si, ti, out);
                    }
                }
            }
        }
    }

    /// Checks that an explanation path replays as a valid equational proof:
    /// every step is an input equality or a congruence whose argument
    /// equalities replay in turn.
    pub fn replay_check(&mut self, x: usize, y: usize, inputs: &[(usize, usize)]) -> bool {
        if x == y {
            return true;
        }
        let steps = self.explain(x, y);
        if steps.is_empty() {
            return false;
        }
        let mut cur = x;
        for step in &steps {
            let (l, r) = (step.left, step.right);
            let (from, to) = if l == cur {
                (l, r)
            } else if r == cur {
                (r, l)
            } else {
                return false;
            };
            let ok = match step.reason {
                Reason::Input(i) => {
                    inputs.get(i).is_some_and(|&(a, b)| (a, b) == (from, to) || (a, b) == (to, from))
                }
                Reason::Congruence => {
                    let (Term::App(f, fa), Term::App(g, ga)) =
                        (self.terms[from].clone(), self.terms[to].clone())
                    else {
                        return false;
                    };
                    f == g
                        && fa.len() == ga.len()
                        && fa.iter().zip(&ga).all(|(s, t)| {
                            let (si, ti) = (self.ids[s], self.ids[t]);
                            self.same_class(si, ti) && self.replay_check(si, ti, inputs)
                        })
                }
            };
            if !ok {
                return false;
            }
            cur = to;
        }
        cur == y
    }
}

/// Satisfiability verdict; the core lists contributing input literals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EufVerdict {
    Sat,
    Unsat { core: Vec<Literal> },
}

impl EufVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, EufVerdict::Sat)
    }
}

fn encode_pred(p: &str, args: &[Term]) -> (Term, Term) {
    (
        Term::App(format!("{PRED_FN_PREFIX}{p}"), args.to_vec()),
        Term::Const(PRED_TRUE.to_string()),
    )
}

struct Prepared {
    graph: EGraph,
    /// (left node, right node, literal index) to merge.
    merges: Vec<(usize, usize, usize)>,
    /// (left node, right node, literal index) required distinct.
    diseqs: Vec<(usize, usize, usize)>,
    /// Literal index asserting ⊥ outright, if any.
    contradiction: Option<usize>,
}

fn prepare(lits: &[Literal]) -> Result<Prepared, EufError> {
    let mut graph = EGraph::new();
    let mut merges = Vec::new();
    let mut diseqs = Vec::new();
    let mut contradiction = None;
    for (i, lit) in lits.iter().enumerate() {
        match (&lit.atom, lit.positive) {
            (Atom::True, true) | (Atom::False, false) => {}
            (Atom::True, false) | (Atom::False, true) => {
                contradiction.get_or_insert(i);
            }
            (Atom::Lt(..), _) => return Err(EufError::NotEuf(lit.to_string())),
            (Atom::Eq(l, r), positive) => {
                if !l.is_euf_pure() || !r.is_euf_pure() {
                    return Err(EufError::NotEuf(lit.to_string()));
                }
                let (li, ri) = (graph.add(l), graph.add(r));
                if positive {
                    merges.push((li, ri, i));
                } else {
                    diseqs.push((li, ri, i));
                }
            }
            (Atom::Pred(p, args), positive) => {
                if !args.iter().all(Term::is_euf_pure) {
                    return Err(EufError::NotEuf(lit.to_string()));
                }
                let (app, tt) = encode_pred(p, args);
                let (ai, ti) = (graph.add(&app), graph.add(&tt));
                if positive {
                    merges.push((ai, ti, i));
                } else {
                    diseqs.push((ai, ti, i));
                }
            }
        }
    }
    Ok(Prepared { graph, merges, diseqs, contradiction })
}

/// Decides a conjunction of pure EUF literals by congruence closure.
pub fn euf_check_sat(lits: &[Literal]) -> Result<EufVerdict, EufError> {
    let Prepared { mut graph, merges, diseqs, contradiction } = prepare(lits)?;
    if let Some(i) = contradiction {
        return Ok(EufVerdict::Unsat { core: vec![lits[i].clone()] });
    }
    for &(l, r, i) in &merges {
        graph.merge(l, r, Reason::Input(i));
    }
    graph.congruence_fixpoint();
    for &(l, r, i) in &diseqs {
        if graph.same_class(l, r) {
            let mut core_idx = BTreeSet::new();
            graph.explain_inputs(l, r, &mut core_idx);
            core_idx.insert(i);
            let core = core_idx.into_iter().map(|k| lits[k].clone()).collect();
            return Ok(EufVerdict::Unsat { core });
        }
    }
    Ok(EufVerdict::Sat)
}

fn entails(lits: &[Literal], fact: &Literal) -> Result<bool, EufError> {
    let mut check = lits.to_vec();
    check.push(fact.negated());
    Ok(!euf_check_sat(&check)?.is_sat())
}

/// Per-class AB-common representatives, constructed bottom-up: a class is
/// representable if it contains a common subterm or an application whose
/// argument classes are all representable.
fn common_reps(
    graph: &mut EGraph,
    coloring: &SymbolColoring,
) -> Result<BTreeMap<usize, Term>, EufError> {
    let n = graph.terms.len();
    let mut reps: BTreeMap<usize, Term> = BTreeMap::new();
    // Seed with common subterms (smallest term per class for determinism).
    for id in 0..n {
        let t = graph.term(id).clone();
        if t.subterms().iter().any(|s| matches!(s, Term::Const(c) if c.starts_with('$'))) {
            continue;
        }
        if coloring.term_locality(&t)? == Locality::AbCommon {
            let root = graph.find(id);
            match reps.get(&root) {
                Some(existing) if *existing <= t => {}
                _ => {
                    reps.insert(root, t);
                }
            }
        }
    }
    // Propagate through applications.
    loop {
        let mut changed = false;
        for ai in 0..graph.apps.len() {
            let id = graph.apps[ai];
            let root = graph.find(id);
            if reps.contains_key(&root) {
                continue;
            }
            let Term::App(f, args) = graph.term(id).clone() else { unreachable!() };
            if f.starts_with('$') {
                continue;
            }
            let arg_reps: Option<Vec<Term>> = args
                .iter()
                .map(|a| {
                    let aid = graph.ids[a];
                    let aroot = graph.find(aid);
                    reps.get(&aroot).cloned()
                })
                .collect();
            if let Some(arg_reps) = arg_reps {
                reps.insert(root, Term::App(f, arg_reps));
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(reps)
}

/// Closure of `lits`' positive part as an e-graph, for witness searches.
fn closure_of(lits: &[Literal]) -> Result<EGraph, EufError> {
    let Prepared { mut graph, merges, .. } = prepare(lits)?;
    for &(l, r, i) in &merges {
        graph.merge(l, r, Reason::Input(i));
    }
    graph.congruence_fixpoint();
    Ok(graph)
}

/// Interpolates an unsatisfiable pair of EUF literal conjunctions.
///
/// The interpolant is a conjunction of AB-common facts entailed by A:
/// equalities and disequalities over a basis of common terms (common
/// subterms of the input plus representatives constructible inside A's
/// e-graph), and predicate facts over the same basis. The conjunction is
/// then greedily pruned while it still contradicts B.
pub fn euf_interpolate(
    a: &[Literal],
    b: &[Literal],
    coloring: &SymbolColoring,
) -> Result<Formula, EufError> {
    if !euf_check_sat(a)?.is_sat() {
        return Ok(Formula::FALSE);
    }
    let joint: Vec<Literal> = a.iter().chain(b).cloned().collect();
    if euf_check_sat(&joint)?.is_sat() {
        return Err(EufError::NotUnsat);
    }

    // Candidate basis of common terms.
    let mut basis: BTreeSet<Term> = BTreeSet::new();
    let mut preds: BTreeSet<(String, usize)> = BTreeSet::new();
    for lit in &joint {
        if let Atom::Pred(p, args) = &lit.atom {
            preds.insert((p.clone(), args.len()));
        }
        for t in lit.atom.terms() {
            for s in t.subterms() {
                if coloring.term_locality(s)? == Locality::AbCommon {
                    basis.insert(s.clone());
                }
            }
        }
    }
    let mut a_graph = closure_of(a)?;
    let reps = common_reps(&mut a_graph, coloring)?;
    for rep in reps.values() {
        basis.insert(rep.clone());
    }
    // Applications over representable argument classes are common terms in
    // their own class even when that class already has a representative;
    // interpolants like x = f(c) need them.
    for id in a_graph.apps.clone() {
        let Term::App(f, args) = a_graph.term(id).clone() else { unreachable!() };
        if f.starts_with('$') {
            continue;
        }
        let arg_reps: Option<Vec<Term>> = args
            .iter()
            .map(|arg| {
                let aid = a_graph.ids[arg];
                let aroot = a_graph.find(aid);
                reps.get(&aroot).cloned()
            })
            .collect();
        if let Some(arg_reps) = arg_reps {
            basis.insert(Term::App(f, arg_reps));
        }
    }
    let basis: Vec<Term> = basis.into_iter().take(24).collect();

    // All A-entailed common facts over the basis.
    let mut facts: Vec<Literal> = Vec::new();
    for (i, u) in basis.iter().enumerate() {
        for v in basis.iter().skip(i + 1) {
            let eq = Literal::pos(Atom::Eq(u.clone(), v.clone()));
            if entails(a, &eq)? {
                facts.push(eq);
            } else {
                let ne = eq.negated();
                if entails(a, &ne)? {
                    facts.push(ne);
                }
            }
        }
    }
    for (p, arity) in &preds {
        let mut tuple = vec![0usize; *arity];
        if basis.is_empty() && *arity > 0 {
            continue;
        }
        if (basis.len().max(1)).pow(*arity as u32) > 4096 {
            continue;
        }
        loop {
            let args: Vec<Term> = tuple.iter().map(|&i| basis[i].clone()).collect();
            let at = Literal::pos(Atom::Pred(p.clone(), args));
            if entails(a, &at)? {
                facts.push(at);
            } else {
                let ne = at.negated();
                if entails(a, &ne)? {
                    facts.push(ne);
                }
            }
            // Next tuple, odometer-style.
            let mut k = 0;
            loop {
                if k == tuple.len() {
                    break;
                }
                tuple[k] += 1;
                if tuple[k] < basis.len() {
                    break;
                }
                tuple[k] = 0;
                k += 1;
            }
            if k == tuple.len() {
                break;
            }
        }
    }

    // The facts must refute B.
    let mut check: Vec<Literal> = b.to_vec();
    check.extend(facts.iter().cloned());
    if euf_check_sat(&check)?.is_sat() {
        return Err(EufError::InterpolantCheck(
            "common consequences of A do not refute B".to_string(),
        ));
    }

    // Greedy pruning keeps the conjunction small; dropping the bulkiest
    // facts first biases toward the terse ones (a = b rather than
    // f(a) = f(b)).
    fn weight(l: &Literal) -> usize {
        l.atom.terms().iter().map(|t| t.subterms().len()).sum()
    }
    let mut kept = facts;
    kept.sort_by_key(|l| std::cmp::Reverse(weight(l)));
    let mut i = 0;
    while i < kept.len() {
        let mut trial: Vec<Literal> = b.to_vec();
        trial.extend(kept.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, l)| l.clone()));
        if !euf_check_sat(&trial)?.is_sat() {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept.sort();

    debug_assert!(kept.iter().all(|f| entails(a, f).unwrap()));
    Ok(Formula::and(kept.into_iter().map(Formula::Lit).collect()))
}

/// Witness for a forced cross equality: a single common term `v` with
/// `B ⊢ b_j = v`, plus `θ = ⊤` per the convex single-witness shape.
pub struct EufWitness {
    pub term: Term,
    pub forced: (String, String),
}

/// Finds the forced pair `(a_i, b_j)` and a common witness on the B side.
///
/// Preconditions (checked): `A ∪ B` satisfiable, and adding all
/// `a_i ≠ b_j` makes it unsatisfiable. Convexity guarantees some single
/// pair is forced.
pub fn euf_equality_witness(
    a: &[Literal],
    b: &[Literal],
    a_strict: &[String],
    b_strict: &[String],
    coloring: &SymbolColoring,
) -> Result<EufWitness, EufError> {
    let joint: Vec<Literal> = a.iter().chain(b).cloned().collect();
    if !euf_check_sat(&joint)?.is_sat() {
        return Err(EufError::WitnessPrecondition("A ∪ B is unsatisfiable".to_string()));
    }
    let mut forced = None;
    'outer: for ai in a_strict {
        for bj in b_strict {
            let ne = Literal::neg(Atom::Eq(Term::constant(ai.clone()), Term::constant(bj.clone())));
            let mut check = joint.clone();
            check.push(ne);
            if !euf_check_sat(&check)?.is_sat() {
                forced = Some((ai.clone(), bj.clone()));
                break 'outer;
            }
        }
    }
    let Some((ai, bj)) = forced else {
        return Err(EufError::WitnessPrecondition(
            "no single cross equality is forced (non-convex behavior?)".to_string(),
        ));
    };

    // Search b_j's class in the closure of B alone for a common member.
    let mut b_graph = closure_of(b)?;
    let bj_term = Term::constant(bj.clone());
    let bj_id = b_graph.add(&bj_term);
    b_graph.congruence_fixpoint();
    let reps = common_reps(&mut b_graph, coloring)?;
    let root = b_graph.find(bj_id);
    let Some(v) = reps.get(&root).cloned() else {
        return Err(EufError::NoCommonWitness(ai, bj));
    };
    debug_assert!(entails(b, &Literal::pos(Atom::Eq(bj_term, v.clone())))?);
    Ok(EufWitness { term: v, forced: (ai, bj) })
}
