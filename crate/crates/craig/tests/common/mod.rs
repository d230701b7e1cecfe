//! Shared test support: brute-force model search over bounded value sets,
//! independent re-implementations of the solvers' decision procedures,
//! quantifier-elimination equivalence checks, and random problem
//! generators. Everything here is deliberately naive and separate from
//! the library's own algorithms.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use craig::idl::{DiffAtom, DiffRel, IdlVar, QeResult};
use craig::utvpi::{UtvpiAtom, UtvpiQeResult};
use craig::{Atom, Formula, FormulaSet, Literal, Signature, SymbolKind, Term, TheoryId};

use rand::rngs::StdRng;
use rand::Rng;

/// A finite first-order model over integer values.
#[derive(Debug, Clone, Default)]
pub struct Model {
    pub consts: BTreeMap<String, i64>,
    pub apps: BTreeMap<(String, Vec<i64>), i64>,
    pub preds: BTreeMap<(String, Vec<i64>), bool>,
}

impl Model {
    pub fn eval_term(&self, t: &Term) -> Option<i64> {
        match t {
            Term::Zero => Some(0),
            Term::Const(c) => self.consts.get(c).copied(),
            Term::Offset(inner, n) => Some(self.eval_term(inner)? + n),
            Term::App(f, args) => {
                let vals: Option<Vec<i64>> = args.iter().map(|a| self.eval_term(a)).collect();
                self.apps.get(&(f.clone(), vals?)).copied()
            }
        }
    }

    pub fn eval_atom(&self, atom: &Atom) -> Option<bool> {
        match atom {
            Atom::True => Some(true),
            Atom::False => Some(false),
            Atom::Eq(l, r) => Some(self.eval_term(l)? == self.eval_term(r)?),
            Atom::Lt(l, r) => Some(self.eval_term(l)? < self.eval_term(r)?),
            Atom::Pred(p, args) => {
                let vals: Option<Vec<i64>> = args.iter().map(|a| self.eval_term(a)).collect();
                self.preds.get(&(p.clone(), vals?)).copied()
            }
        }
    }

    pub fn eval_formula(&self, f: &Formula) -> Option<bool> {
        match f {
            Formula::Lit(l) => {
                let v = self.eval_atom(&l.atom)?;
                Some(if l.positive { v } else { !v })
            }
            Formula::And(fs) => {
                let mut all = true;
                for g in fs {
                    match self.eval_formula(g) {
                        Some(false) => return Some(false),
                        Some(true) => {}
                        None => all = false,
                    }
                }
                if all {
                    Some(true)
                } else {
                    None
                }
            }
            Formula::Or(fs) => {
                let mut any_unknown = false;
                for g in fs {
                    match self.eval_formula(g) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => any_unknown = true,
                    }
                }
                if any_unknown {
                    None
                } else {
                    Some(false)
                }
            }
            Formula::Not(g) => self.eval_formula(g).map(|v| !v),
        }
    }

    fn satisfies_all(&self, set: &FormulaSet) -> bool {
        set.iter().all(|f| self.eval_formula(f) == Some(true))
    }

    fn any_false(&self, set: &FormulaSet) -> bool {
        set.iter().any(|f| self.eval_formula(f) == Some(false))
    }
}

fn collect_apps_ordered(set: &FormulaSet) -> Vec<Term> {
    let mut apps: BTreeSet<Term> = BTreeSet::new();
    for f in set {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in lits {
            for t in l.atom.terms() {
                for s in t.subterms() {
                    if matches!(s, Term::App(..)) {
                        apps.insert(s.clone());
                    }
                }
            }
        }
    }
    // Arguments before the applications that use them.
    let mut out: Vec<Term> = apps.into_iter().collect();
    out.sort_by_key(|t| t.subterms().len());
    out
}

fn collect_pred_atoms(set: &FormulaSet) -> Vec<(String, Vec<Term>)> {
    let mut out: BTreeSet<(String, Vec<Term>)> = BTreeSet::new();
    for f in set {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in lits {
            if let Atom::Pred(p, args) = &l.atom {
                out.insert((p.clone(), args.clone()));
            }
        }
    }
    out.into_iter().collect()
}

/// Exhaustive model search: constants and application values range over
/// `values`; congruence is respected by construction (one value per
/// argument tuple); predicate truths are guessed per value tuple.
/// `Some(model)` is a genuine witness; `None` only rules out models over
/// the given value set.
pub fn find_model(set: &FormulaSet, values: &[i64]) -> Option<Model> {
    let mut consts: BTreeSet<String> = BTreeSet::new();
    for f in set {
        f.collect_constants(&mut consts);
    }
    let consts: Vec<String> = consts.into_iter().collect();
    let apps = collect_apps_ordered(set);
    let preds = collect_pred_atoms(set);

    fn choose_consts(
        set: &FormulaSet,
        values: &[i64],
        consts: &[String],
        i: usize,
        apps: &[Term],
        preds: &[(String, Vec<Term>)],
        model: &mut Model,
    ) -> bool {
        if model.any_false(set) {
            return false;
        }
        if i == consts.len() {
            return choose_apps(set, values, apps, 0, preds, model);
        }
        for &v in values {
            model.consts.insert(consts[i].clone(), v);
            if choose_consts(set, values, consts, i + 1, apps, preds, model) {
                return true;
            }
        }
        model.consts.remove(&consts[i]);
        false
    }

    fn choose_apps(
        set: &FormulaSet,
        values: &[i64],
        apps: &[Term],
        i: usize,
        preds: &[(String, Vec<Term>)],
        model: &mut Model,
    ) -> bool {
        if model.any_false(set) {
            return false;
        }
        if i == apps.len() {
            return choose_preds(set, values, preds, 0, model);
        }
        let Term::App(f, args) = &apps[i] else { unreachable!() };
        let arg_vals: Vec<i64> = args
            .iter()
            .map(|a| model.eval_term(a).expect("arguments precede applications"))
            .collect();
        let key = (f.clone(), arg_vals);
        if model.apps.contains_key(&key) {
            // Forced by congruence with an earlier application.
            return choose_apps(set, values, apps, i + 1, preds, model);
        }
        for &v in values {
            model.apps.insert(key.clone(), v);
            if choose_apps(set, values, apps, i + 1, preds, model) {
                return true;
            }
        }
        model.apps.remove(&key);
        false
    }

    fn choose_preds(
        set: &FormulaSet,
        values: &[i64],
        preds: &[(String, Vec<Term>)],
        i: usize,
        model: &mut Model,
    ) -> bool {
        if model.any_false(set) {
            return false;
        }
        if i == preds.len() {
            return model.satisfies_all(set);
        }
        let (p, args) = &preds[i];
        let arg_vals: Vec<i64> = args
            .iter()
            .map(|a| model.eval_term(a).expect("terms are valued before predicates"))
            .collect();
        let key = (p.clone(), arg_vals);
        if model.preds.contains_key(&key) {
            return choose_preds(set, values, preds, i + 1, model);
        }
        for v in [true, false] {
            model.preds.insert(key.clone(), v);
            if choose_preds(set, values, preds, i + 1, model) {
                return true;
            }
        }
        model.preds.remove(&key);
        let _ = values;
        false
    }

    let mut model = Model::default();
    if choose_consts(set, values, &consts, 0, &apps, &preds, &mut model) {
        Some(model)
    } else {
        None
    }
}

/// Value window for mixed problems, wide enough for difference
/// constraints: every constant and application value ranges over
/// `[-(v+1)·w, (v+1)·w]` where `v` counts the value nodes and `w` the
/// largest offset magnitude (at least 1).
pub fn idl_window(set: &FormulaSet) -> Vec<i64> {
    let mut consts = BTreeSet::new();
    for f in set {
        f.collect_constants(&mut consts);
    }
    let apps = collect_apps_ordered(set);
    let v = (consts.len() + apps.len()) as i64;
    let mut w = 1i64;
    fn max_offset(t: &Term, w: &mut i64) {
        match t {
            Term::Offset(inner, n) => {
                *w = (*w).max(n.abs());
                max_offset(inner, w);
            }
            Term::App(_, args) => args.iter().for_each(|a| max_offset(a, w)),
            _ => {}
        }
    }
    for f in set {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in lits {
            for t in l.atom.terms() {
                max_offset(t, &mut w);
            }
        }
    }
    let bound = (v + 1) * w;
    (-bound..=bound).collect()
}

/// EUF-exact value set: one value per distinct subterm suffices for
/// conjunctions of equality literals.
pub fn euf_domain(set: &FormulaSet) -> Vec<i64> {
    let mut subterms: BTreeSet<Term> = BTreeSet::new();
    for f in set {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in lits {
            for t in l.atom.terms() {
                for s in t.subterms() {
                    subterms.insert(s.clone());
                }
            }
        }
    }
    (0..subterms.len().max(1) as i64).collect()
}

pub fn lits_to_set(lits: &[Literal]) -> FormulaSet {
    lits.iter().cloned().map(Formula::Lit).collect()
}

/// Number of free choice points the model search would explore:
/// constants plus distinct application nodes. Exhaustive search is only
/// affordable when this is small.
pub fn search_nodes(set: &FormulaSet) -> usize {
    let mut consts = BTreeSet::new();
    for f in set {
        f.collect_constants(&mut consts);
    }
    consts.len() + collect_apps_ordered(set).len()
}

/// Congruence closure by repeated scans over explicit class ids; no
/// union-find, no explanations. Decides conjunctions of EUF literals.
pub fn naive_euf_unsat(lits: &[Literal]) -> bool {
    let mut terms: Vec<Term> = Vec::new();
    let mut index: BTreeMap<Term, usize> = BTreeMap::new();
    let add = |t: &Term, terms: &mut Vec<Term>, index: &mut BTreeMap<Term, usize>| {
        for s in t.subterms().into_iter().rev() {
            if !index.contains_key(s) {
                index.insert(s.clone(), terms.len());
                terms.push(s.clone());
            }
        }
        index[t]
    };

    let mut eqs: Vec<(usize, usize)> = Vec::new();
    let mut diseqs: Vec<(usize, usize)> = Vec::new();
    let tt = Term::constant("$tt");
    for l in lits {
        match (&l.atom, l.positive) {
            (Atom::True, true) | (Atom::False, false) => {}
            (Atom::True, false) | (Atom::False, true) => return true,
            (Atom::Eq(x, y), pos) => {
                let (i, j) = (
                    add(x, &mut terms, &mut index),
                    add(y, &mut terms, &mut index),
                );
                if pos {
                    eqs.push((i, j));
                } else {
                    diseqs.push((i, j));
                }
            }
            (Atom::Pred(p, args), pos) => {
                let app = Term::app(format!("$pred${p}"), args.clone());
                let (i, j) = (
                    add(&app, &mut terms, &mut index),
                    add(&tt, &mut terms, &mut index),
                );
                if pos {
                    eqs.push((i, j));
                } else {
                    diseqs.push((i, j));
                }
            }
            (Atom::Lt(..), _) => panic!("naive_euf_unsat expects EUF literals"),
        }
    }

    let n = terms.len();
    let mut class: Vec<usize> = (0..n).collect();
    loop {
        let mut changed = false;
        for &(i, j) in &eqs {
            let (ci, cj) = (class[i], class[j]);
            if ci != cj {
                for c in class.iter_mut() {
                    if *c == cj {
                        *c = ci;
                    }
                }
                changed = true;
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if class[i] == class[j] {
                    continue;
                }
                let (Term::App(f, fa), Term::App(g, ga)) = (&terms[i], &terms[j]) else {
                    continue;
                };
                if f == g
                    && fa.len() == ga.len()
                    && fa.iter().zip(ga).all(|(s, t)| class[index[s]] == class[index[t]])
                {
                    let (ci, cj) = (class[i], class[j]);
                    for c in class.iter_mut() {
                        if *c == cj {
                            *c = ci;
                        }
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    diseqs.into_iter().any(|(i, j)| class[i] == class[j])
}

/// Floyd-Warshall over the weak-bound graph; an independent check of the
/// Bellman-Ford solver.
pub fn floyd_warshall_unsat(atoms: &[DiffAtom]) -> bool {
    let mut vars: Vec<IdlVar> = Vec::new();
    for a in atoms {
        for v in [&a.lhs, &a.rhs] {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    let n = vars.len();
    let idx = |v: &IdlVar| vars.iter().position(|u| u == v).unwrap();
    const INF: i64 = i64::MAX / 4;
    let mut dist = vec![vec![INF; n]; n];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = 0;
    }
    // val(lhs) ≤ val(rhs) + k  =>  dist[rhs][lhs] candidate k
    let bound = |from: usize, to: usize, k: i64, dist: &mut Vec<Vec<i64>>| {
        if k < dist[from][to] {
            dist[from][to] = k;
        }
    };
    for a in atoms {
        let (l, r) = (idx(&a.lhs), idx(&a.rhs));
        match a.rel {
            DiffRel::Lt => bound(r, l, a.n - 1, &mut dist),
            DiffRel::Eq => {
                bound(r, l, a.n, &mut dist);
                bound(l, r, -a.n, &mut dist);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = dist[i][k].saturating_add(dist[k][j]);
                if via < dist[i][j] {
                    dist[i][j] = via;
                }
            }
        }
    }
    (0..n).any(|i| dist[i][i] < 0)
}

/// Exhaustive integer search for difference atoms over a window.
pub fn idl_brute_model(atoms: &[DiffAtom], window: &[i64]) -> Option<BTreeMap<String, i64>> {
    let mut vars: BTreeSet<String> = BTreeSet::new();
    for a in atoms {
        for v in [&a.lhs, &a.rhs] {
            if let IdlVar::Const(c) = v {
                vars.insert(c.clone());
            }
        }
    }
    let vars: Vec<String> = vars.into_iter().collect();
    fn rec(
        atoms: &[DiffAtom],
        window: &[i64],
        vars: &[String],
        i: usize,
        assign: &mut BTreeMap<String, i64>,
    ) -> bool {
        let value = |v: &IdlVar, assign: &BTreeMap<String, i64>| match v {
            IdlVar::Zero => Some(0),
            IdlVar::Const(c) => assign.get(c).copied(),
        };
        for a in atoms {
            if let (Some(l), Some(r)) = (value(&a.lhs, assign), value(&a.rhs, assign)) {
                let ok = match a.rel {
                    DiffRel::Eq => l == r + a.n,
                    DiffRel::Lt => l < r + a.n,
                };
                if !ok {
                    return false;
                }
            }
        }
        if i == vars.len() {
            return true;
        }
        for &v in window {
            assign.insert(vars[i].clone(), v);
            if rec(atoms, window, vars, i + 1, assign) {
                return true;
            }
        }
        assign.remove(&vars[i]);
        false
    }
    let mut assign = BTreeMap::new();
    rec(atoms, window, &vars, 0, &mut assign).then_some(assign)
}

fn atom_holds(a: &DiffAtom, value: &dyn Fn(&IdlVar) -> i64) -> bool {
    let l = value(&a.lhs);
    let r = value(&a.rhs) + a.n;
    match a.rel {
        DiffRel::Eq => l == r,
        DiffRel::Lt => l < r,
    }
}

fn max_abs_offset(atoms: &[DiffAtom]) -> i64 {
    atoms.iter().map(|a| a.n.abs()).max().unwrap_or(0)
}

/// Checks `∃x.⋀atoms  ⟺  ⋁ disjuncts` pointwise over all assignments of
/// the free variables in `[-5, 5]^k`, with the witness for x searched in
/// the padded window the bound terms can reach.
pub fn check_idl_qe_equiv(var: &str, atoms: &[DiffAtom], out: &QeResult) -> bool {
    let mut free: BTreeSet<String> = BTreeSet::new();
    for a in atoms {
        for v in [&a.lhs, &a.rhs] {
            if let IdlVar::Const(c) = v {
                if c != var {
                    free.insert(c.clone());
                }
            }
        }
    }
    let free: Vec<String> = free.into_iter().collect();
    let pad = max_abs_offset(atoms) + 1;
    let x_range: Vec<i64> = (-5 - pad..=5 + pad).collect();

    let mut assign: BTreeMap<String, i64> = BTreeMap::new();
    fn rec(
        var: &str,
        atoms: &[DiffAtom],
        out: &QeResult,
        free: &[String],
        i: usize,
        x_range: &[i64],
        assign: &mut BTreeMap<String, i64>,
    ) -> bool {
        if i == free.len() {
            let lhs = x_range.iter().any(|&xv| {
                let value = |v: &IdlVar| match v {
                    IdlVar::Zero => 0,
                    IdlVar::Const(c) if c == var => xv,
                    IdlVar::Const(c) => assign[c],
                };
                atoms.iter().all(|a| atom_holds(a, &value))
            });
            let value = |v: &IdlVar| match v {
                IdlVar::Zero => 0,
                IdlVar::Const(c) => assign[c],
            };
            let rhs = out.disjuncts.iter().any(|d| match &d.formula {
                None => false,
                Some(atoms) => atoms.iter().all(|a| atom_holds(a, &value)),
            });
            return lhs == rhs;
        }
        for v in -5..=5 {
            assign.insert(free[i].clone(), v);
            if !rec(var, atoms, out, free, i + 1, x_range, assign) {
                return false;
            }
        }
        assign.remove(&free[i]);
        true
    }
    rec(var, atoms, out, &free, 0, &x_range, &mut assign)
}

/// Same pointwise equivalence for the UTVPI procedure.
pub fn check_utvpi_qe_equiv(var: &str, atoms: &[UtvpiAtom], out: &UtvpiQeResult) -> bool {
    let mut free: BTreeSet<String> = BTreeSet::new();
    for a in atoms {
        for v in a.vars() {
            if let IdlVar::Const(c) = v {
                if c != var {
                    free.insert(c.clone());
                }
            }
        }
    }
    let free: Vec<String> = free.into_iter().collect();
    let pad = atoms.iter().map(|a| a.n.abs()).max().unwrap_or(0) + 11;
    let x_range: Vec<i64> = (-5 - pad..=5 + pad).collect();

    fn rec(
        var: &str,
        atoms: &[UtvpiAtom],
        out: &UtvpiQeResult,
        free: &[String],
        i: usize,
        x_range: &[i64],
        assign: &mut BTreeMap<String, i64>,
    ) -> bool {
        if i == free.len() {
            let lhs = x_range.iter().any(|&xv| {
                let value = |v: &IdlVar| match v {
                    IdlVar::Zero => 0,
                    IdlVar::Const(c) if c == var => xv,
                    IdlVar::Const(c) => assign[c],
                };
                atoms.iter().all(|a| a.holds(value))
            });
            let value = |v: &IdlVar| match v {
                IdlVar::Zero => 0,
                IdlVar::Const(c) => assign[c],
            };
            let rhs = out.disjuncts.iter().any(|d| match &d.formula {
                None => false,
                Some(atoms) => atoms.iter().all(|a| a.holds(value)),
            });
            return lhs == rhs;
        }
        for v in -5..=5 {
            assign.insert(free[i].clone(), v);
            if !rec(var, atoms, out, free, i + 1, x_range, assign) {
                return false;
            }
        }
        assign.remove(&free[i]);
        true
    }
    let mut assign = BTreeMap::new();
    rec(var, atoms, out, &free, 0, &x_range, &mut assign)
}

// --- random generation ---------------------------------------------------

pub struct ProblemGen {
    pub rng: StdRng,
    pub n_consts: usize,
    pub max_offset: i64,
    pub with_boolean: bool,
}

pub struct GeneratedProblem {
    pub signature: Signature,
    pub a: FormulaSet,
    pub b: FormulaSet,
}

impl ProblemGen {
    pub fn new(rng: StdRng) -> Self {
        ProblemGen { rng, n_consts: 5, max_offset: 3, with_boolean: true }
    }

    fn const_name(&self, i: usize) -> String {
        format!("c{i}")
    }

    fn signature(&self) -> Signature {
        let mut sig = Signature::new();
        for i in 0..self.n_consts {
            sig.declare(&self.const_name(i), SymbolKind::Const).unwrap();
        }
        sig.declare("f", SymbolKind::Func { theory: TheoryId::Euf, arity: 1 }).unwrap();
        sig.declare("g", SymbolKind::Func { theory: TheoryId::Euf, arity: 2 }).unwrap();
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        sig.enable_idl();
        sig
    }

    fn rand_const(&mut self, pool: &[usize]) -> Term {
        let i = pool[self.rng.random_range(0..pool.len())];
        Term::constant(self.const_name(i))
    }

    fn rand_base(&mut self, pool: &[usize]) -> Term {
        if self.rng.random_ratio(1, 8) {
            Term::Zero
        } else {
            self.rand_const(pool)
        }
    }

    fn rand_term(&mut self, pool: &[usize], depth: usize) -> Term {
        let pick = self.rng.random_range(0..10);
        match pick {
            0..=4 => self.rand_const(pool),
            5 | 6 => {
                let inner = if depth > 0 && self.rng.random_ratio(1, 4) {
                    self.rand_term(pool, depth - 1)
                } else {
                    self.rand_const(pool)
                };
                Term::app("f", vec![inner])
            }
            7 => {
                let l = self.rand_const(pool);
                let r = self.rand_const(pool);
                Term::app("g", vec![l, r])
            }
            _ => {
                let n = self.rng.random_range(-self.max_offset..=self.max_offset);
                Term::offset(self.rand_base(pool), n)
            }
        }
    }

    fn rand_literal(&mut self, pool: &[usize]) -> Formula {
        let positive = self.rng.random_ratio(3, 4);
        let atom = match self.rng.random_range(0..10) {
            0..=3 => Atom::Eq(self.rand_term(pool, 1), self.rand_term(pool, 1)),
            4..=6 => {
                let n = self.rng.random_range(-self.max_offset..=self.max_offset);
                Atom::Lt(self.rand_base(pool), Term::offset(self.rand_base(pool), n))
            }
            7 | 8 => Atom::Eq(
                self.rand_base(pool),
                Term::offset(self.rand_base(pool), self.rng.random_range(0..=self.max_offset)),
            ),
            _ => Atom::Pred("P".into(), vec![self.rand_term(pool, 0)]),
        };
        Formula::Lit(Literal { positive, atom })
    }

    fn rand_member(&mut self, pool: &[usize]) -> Formula {
        if self.with_boolean && self.rng.random_ratio(1, 6) {
            let l = self.rand_literal(pool);
            let r = self.rand_literal(pool);
            if self.rng.random_bool(0.5) {
                Formula::or(vec![l, r])
            } else {
                Formula::and(vec![l, r])
            }
        } else {
            self.rand_literal(pool)
        }
    }

    /// A random mixed pair. Sides draw constants from overlapping pools so
    /// strict and common constants both occur.
    pub fn problem(&mut self, per_side: usize) -> GeneratedProblem {
        let n = self.n_consts;
        let a_hi = self.rng.random_range(n.div_ceil(2)..=n);
        let b_lo = self.rng.random_range(0..=n / 2);
        let a_pool: Vec<usize> = (0..a_hi).collect();
        let b_pool: Vec<usize> = (b_lo..n).collect();
        let mut a = FormulaSet::new();
        let mut b = FormulaSet::new();
        for _ in 0..per_side {
            let fa = self.rand_member(&a_pool);
            a.insert(fa);
            let fb = self.rand_member(&b_pool);
            b.insert(fb);
        }
        GeneratedProblem { signature: self.signature(), a, b }
    }

    /// Random pure EUF literal conjunction: up to 5 constants, two unary
    /// symbols, one binary, one predicate.
    pub fn euf_literals(&mut self, n: usize) -> Vec<Literal> {
        let consts = 1 + self.rng.random_range(0..5usize);
        let pool: Vec<usize> = (0..consts).collect();
        let term = |g: &mut Self, depth: usize| -> Term {
            let mut t = g.rand_const(&pool);
            for _ in 0..depth {
                t = match g.rng.random_range(0..3) {
                    0 => Term::app("f", vec![t]),
                    1 => Term::app("k", vec![t]),
                    _ => Term::app("g", vec![t, g.rand_const(&pool)]),
                };
            }
            t
        };
        let mut out = Vec::new();
        for _ in 0..n {
            let positive = self.rng.random_ratio(2, 3);
            let atom = if self.rng.random_ratio(1, 5) {
                let d = self.rng.random_range(0..2usize);
                Atom::Pred("P".into(), vec![term(self, d)])
            } else {
                let dl = self.rng.random_range(0..3usize);
                let dr = self.rng.random_range(0..2usize);
                Atom::Eq(term(self, dl), term(self, dr))
            };
            out.push(Literal { positive, atom });
        }
        out
    }

    /// Random difference atoms over up to 4 constants and `0`.
    pub fn idl_atoms(&mut self, n: usize) -> Vec<DiffAtom> {
        let consts = 1 + self.rng.random_range(0..4usize);
        let mut out = Vec::new();
        for _ in 0..n {
            let var = |g: &mut Self| -> IdlVar {
                let r = g.rng.random_range(0..=consts);
                if r == consts {
                    IdlVar::Zero
                } else {
                    IdlVar::Const(format!("c{r}"))
                }
            };
            let lhs = var(self);
            let rhs = var(self);
            if lhs == rhs {
                continue;
            }
            let k = self.rng.random_range(-self.max_offset..=self.max_offset);
            out.push(if self.rng.random_ratio(1, 4) {
                DiffAtom::eq(lhs, rhs, k)
            } else {
                DiffAtom::lt(lhs, rhs, k)
            });
        }
        out
    }

    /// Random flat-able ground EUF set over designated symbols, for the
    /// symbol-elimination tests: equalities and predicate literals over
    /// terms in f, g (unary), h (binary), constants a0..a3.
    pub fn sigma0_set(&mut self, n: usize) -> FormulaSet {
        let pool: Vec<usize> = (0..4).collect();
        let term = |g: &mut Self, depth: usize| -> Term {
            let mut t = Term::constant(format!("a{}", pool[g.rng.random_range(0..pool.len())]));
            for _ in 0..depth {
                t = match g.rng.random_range(0..3) {
                    0 => Term::app("f", vec![t]),
                    1 => Term::app("g", vec![t]),
                    _ => {
                        let u = Term::constant(format!(
                            "a{}",
                            pool[g.rng.random_range(0..pool.len())]
                        ));
                        Term::app("h", vec![t, u])
                    }
                };
            }
            t
        };
        let mut out = FormulaSet::new();
        for _ in 0..n {
            let positive = self.rng.random_ratio(2, 3);
            let atom = if self.rng.random_ratio(1, 4) {
                let d = self.rng.random_range(0..2usize);
                Atom::Pred("Q".into(), vec![term(self, d)])
            } else {
                let dl = self.rng.random_range(0..3usize);
                let dr = self.rng.random_range(0..2usize);
                Atom::Eq(term(self, dl), term(self, dr))
            };
            let lit = Formula::Lit(Literal { positive, atom });
            if self.with_boolean && self.rng.random_ratio(1, 6) {
                let other = Formula::Lit(Literal {
                    positive: self.rng.random_bool(0.5),
                    atom: Atom::Eq(term(self, 1), term(self, 0)),
                });
                out.insert(Formula::or(vec![lit, other]));
            } else {
                out.insert(lit);
            }
        }
        out
    }

    /// Random difference-atom conjunction mentioning `x` and up to `k`
    /// other variables.
    pub fn qe_instance(&mut self, k: usize, n_atoms: usize) -> (String, Vec<DiffAtom>) {
        let var = "x".to_string();
        let mut atoms = Vec::new();
        for _ in 0..n_atoms {
            let pick_var = |rng: &mut StdRng, allow_x: bool| -> IdlVar {
                let r = rng.random_range(0..=(k + if allow_x { 1 } else { 0 }));
                if allow_x && r == k + 1 {
                    IdlVar::Const(var.clone())
                } else if r == k {
                    IdlVar::Zero
                } else {
                    IdlVar::Const(format!("y{r}"))
                }
            };
            let lhs = pick_var(&mut self.rng, true);
            let mut rhs = pick_var(&mut self.rng, true);
            if rhs == lhs {
                rhs = IdlVar::Zero;
            }
            if rhs == lhs {
                continue;
            }
            let n = self.rng.random_range(-3..=3);
            let atom = if self.rng.random_ratio(1, 3) {
                DiffAtom::eq(lhs, rhs, n)
            } else {
                DiffAtom::lt(lhs, rhs, n)
            };
            atoms.push(atom);
        }
        (var, atoms)
    }
}
