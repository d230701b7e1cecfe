//! Integer difference logic: atom normal form, satisfiability by
//! negative-cycle detection, interpolation from cycle segments, and
//! quantifier elimination for a single variable.
//!
//! Every atom is kept in the canonical shape `lhs ⋈ rhs + n` with
//! `⋈ ∈ {=, <}` and `lhs`, `rhs` free constants or `0`. Strictness is
//! resolved at the graph layer: over the integers `x < y + n` and
//! `x ≤ y + (n-1)` coincide, so all edges carry weak bounds.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::color::Side;
use crate::term::{Atom, Literal, Term};

/// A vertex of the constraint graph: a free constant or the builtin `0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdlVar {
    Zero,
    Const(String),
}

impl IdlVar {
    pub fn term(&self) -> Term {
        match self {
            IdlVar::Zero => Term::Zero,
            IdlVar::Const(c) => Term::Const(c.clone()),
        }
    }

    fn from_base(t: &Term) -> Option<IdlVar> {
        match t {
            Term::Zero => Some(IdlVar::Zero),
            Term::Const(c) => Some(IdlVar::Const(c.clone())),
            _ => None,
        }
    }
}

impl fmt::Display for IdlVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdlVar::Zero => write!(f, "0"),
            IdlVar::Const(c) => write!(f, "{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiffRel {
    Eq,
    Lt,
}

/// Canonical difference atom `lhs ⋈ rhs + n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiffAtom {
    pub lhs: IdlVar,
    pub rel: DiffRel,
    pub rhs: IdlVar,
    pub n: i64,
}

impl DiffAtom {
    pub fn lt(lhs: IdlVar, rhs: IdlVar, n: i64) -> DiffAtom {
        DiffAtom { lhs, rel: DiffRel::Lt, rhs, n }
    }

    pub fn eq(lhs: IdlVar, rhs: IdlVar, n: i64) -> DiffAtom {
        DiffAtom { lhs, rel: DiffRel::Eq, rhs, n }
    }

    /// Weak upper bound `lhs ≤ rhs + n`, i.e. `lhs < rhs + (n+1)`.
    pub fn le(lhs: IdlVar, rhs: IdlVar, n: i64) -> DiffAtom {
        DiffAtom::lt(lhs, rhs, n + 1)
    }

    pub fn atom(&self) -> Atom {
        let rhs = Term::offset(self.rhs.term(), self.n);
        match self.rel {
            DiffRel::Eq => Atom::Eq(self.lhs.term(), rhs),
            DiffRel::Lt => Atom::Lt(self.lhs.term(), rhs),
        }
    }

    pub fn holds(&self, value: impl Fn(&IdlVar) -> i64) -> bool {
        let l = value(&self.lhs);
        let r = value(&self.rhs) + self.n;
        match self.rel {
            DiffRel::Eq => l == r,
            DiffRel::Lt => l < r,
        }
    }

    fn vars(&self) -> [&IdlVar; 2] {
        [&self.lhs, &self.rhs]
    }
}

impl fmt::Display for DiffAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atom())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdlError {
    #[error("literal `{0}` is not a pure IDL literal")]
    NotIdl(String),
    #[error("negated equality `{0}` reached the IDL core; it must be split upstream")]
    NegatedEquality(String),
    #[error("interpolation precondition violated: the atom sets are jointly satisfiable")]
    NotUnsat,
    #[error("interpolant check failed: {0}")]
    InterpolantCheck(String),
}

/// Result of normalizing one literal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Normalized {
    Top,
    Bottom,
    Atoms(Vec<DiffAtom>),
}

impl Normalized {
    fn single(a: DiffAtom) -> Normalized {
        Normalized::Atoms(vec![a])
    }
}

fn split_idl_term(t: &Term) -> Option<(IdlVar, i64)> {
    let (base, off) = t.as_idl_offset()?;
    Some((IdlVar::from_base(base)?, off))
}

/// Rewrites a pure IDL literal into canonical difference atoms.
///
/// Negated `<` flips into a positive bound; negated equalities are the
/// combiner's job to split and are rejected here.
pub fn idl_normalize(lit: &Literal) -> Result<Normalized, IdlError> {
    match (&lit.atom, lit.positive) {
        (Atom::True, true) | (Atom::False, false) => Ok(Normalized::Top),
        (Atom::True, false) | (Atom::False, true) => Ok(Normalized::Bottom),
        (Atom::Pred(..), _) => Err(IdlError::NotIdl(lit.to_string())),
        (Atom::Eq(l, r), positive) => {
            let (i, k1) = split_idl_term(l).ok_or_else(|| IdlError::NotIdl(lit.to_string()))?;
            let (j, k2) = split_idl_term(r).ok_or_else(|| IdlError::NotIdl(lit.to_string()))?;
            if !positive {
                return Err(IdlError::NegatedEquality(lit.to_string()));
            }
            let n = k2 - k1;
            if i == j {
                return Ok(if n == 0 { Normalized::Top } else { Normalized::Bottom });
            }
            Ok(Normalized::single(DiffAtom::eq(i, j, n)))
        }
        (Atom::Lt(l, r), positive) => {
            let (i, k1) = split_idl_term(l).ok_or_else(|| IdlError::NotIdl(lit.to_string()))?;
            let (j, k2) = split_idl_term(r).ok_or_else(|| IdlError::NotIdl(lit.to_string()))?;
            let (lhs, rhs, n) = if positive {
                // i + k1 < j + k2
                (i, j, k2 - k1)
            } else {
                // not(i + k1 < j + k2)  <=>  j + k2 <= i + k1
                (j, i, k1 - k2 + 1)
            };
            if lhs == rhs {
                return Ok(if n > 0 { Normalized::Top } else { Normalized::Bottom });
            }
            Ok(Normalized::single(DiffAtom::lt(lhs, rhs, n)))
        }
    }
}

/// Normalizes a conjunction of literals, folding `⊤` away. `Bottom` wins.
pub fn normalize_conj<'a>(
    lits: impl IntoIterator<Item = &'a Literal>,
) -> Result<Normalized, IdlError> {
    let mut atoms = Vec::new();
    for lit in lits {
        match idl_normalize(lit)? {
            Normalized::Top => {}
            Normalized::Bottom => return Ok(Normalized::Bottom),
            Normalized::Atoms(mut more) => atoms.append(&mut more),
        }
    }
    Ok(Normalized::Atoms(atoms))
}

/// One edge of the constraint graph: `val(to) ≤ val(from) + weight`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub from: IdlVar,
    pub to: IdlVar,
    pub weight: i64,
    pub atom: DiffAtom,
    pub side: Side,
}

/// Satisfiability verdict for a difference-atom conjunction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdlVerdict {
    /// Integer values for the constants; `0` is implicitly zero.
    Sat(BTreeMap<String, i64>),
    /// Edges of a negative-weight cycle, in cycle order.
    Unsat(Vec<Edge>),
}

impl IdlVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, IdlVerdict::Sat(_))
    }
}

fn edges_of(atom: &DiffAtom, side: Side) -> Vec<Edge> {
    match atom.rel {
        DiffRel::Lt => vec![Edge {
            from: atom.rhs.clone(),
            to: atom.lhs.clone(),
            weight: atom.n - 1,
            atom: atom.clone(),
            side,
        }],
        DiffRel::Eq => vec![
            Edge {
                from: atom.rhs.clone(),
                to: atom.lhs.clone(),
                weight: atom.n,
                atom: atom.clone(),
                side,
            },
            Edge {
                from: atom.lhs.clone(),
                to: atom.rhs.clone(),
                weight: -atom.n,
                atom: atom.clone(),
                side,
            },
        ],
    }
}

/// Bellman-Ford over the constraint graph. Tagged atoms keep their side so
/// that an unsat cycle can be split into A- and B-segments.
pub fn idl_check_sat_tagged(atoms: &[(DiffAtom, Side)]) -> IdlVerdict {
    let mut vars: Vec<IdlVar> = Vec::new();
    for (a, _) in atoms {
        for v in a.vars() {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    vars.sort();
    let index: BTreeMap<&IdlVar, usize> = vars.iter().enumerate().map(|(i, v)| (v, i)).collect();
    let edges: Vec<Edge> = atoms.iter().flat_map(|(a, s)| edges_of(a, *s)).collect();

    // Virtual source: all distances start at zero.
    let n = vars.len();
    let mut dist = vec![0i64; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut changed_vertex = None;
    for round in 0..=n {
        let mut changed = None;
        for (ei, e) in edges.iter().enumerate() {
            let (u, v) = (index[&e.from], index[&e.to]);
            if dist[u] + e.weight < dist[v] {
                dist[v] = dist[u] + e.weight;
                pred[v] = Some(ei);
                changed = Some(v);
            }
        }
        if changed.is_none() {
            break;
        }
        if round == n {
            changed_vertex = changed;
        }
    }

    if let Some(start) = changed_vertex {
        // Walk predecessors n times to land on the cycle, then collect it.
        let mut v = start;
        for _ in 0..n {
            v = index[&edges[pred[v].expect("relaxed vertex has a predecessor")].from];
        }
        let mut cycle = Vec::new();
        let mut cur = v;
        loop {
            let e = &edges[pred[cur].expect("cycle vertex has a predecessor")];
            cycle.push(e.clone());
            cur = index[&e.from];
            if cur == v {
                break;
            }
        }
        cycle.reverse();
        debug_assert!(cycle.iter().map(|e| e.weight).sum::<i64>() < 0);
        return IdlVerdict::Unsat(cycle);
    }

    // Shift so that 0 is actually assigned zero.
    let zero_shift = index.get(&IdlVar::Zero).map_or(0, |&i| dist[i]);
    let model = vars
        .iter()
        .zip(&dist)
        .filter_map(|(v, d)| match v {
            IdlVar::Const(c) => Some((c.clone(), d - zero_shift)),
            IdlVar::Zero => None,
        })
        .collect();
    IdlVerdict::Sat(model)
}

pub fn idl_check_sat(atoms: &[DiffAtom]) -> IdlVerdict {
    let tagged: Vec<(DiffAtom, Side)> = atoms.iter().map(|a| (a.clone(), Side::A)).collect();
    idl_check_sat_tagged(&tagged)
}

/// Decides a conjunction of difference atoms plus disequalities
/// `l != r + n`, splitting each disequality into its two strict halves.
pub fn idl_check_sat_with_diseqs(atoms: &[DiffAtom], diseqs: &[DiffAtom]) -> bool {
    fn go(atoms: &mut Vec<DiffAtom>, diseqs: &[DiffAtom]) -> bool {
        if !idl_check_sat(atoms).is_sat() {
            return false;
        }
        match diseqs.split_first() {
            None => true,
            Some((d, rest)) => {
                debug_assert_eq!(d.rel, DiffRel::Eq);
                for split in [
                    DiffAtom::lt(d.lhs.clone(), d.rhs.clone(), d.n),
                    DiffAtom::lt(d.rhs.clone(), d.lhs.clone(), -d.n),
                ] {
                    atoms.push(split);
                    let ok = go(atoms, rest);
                    atoms.pop();
                    if ok {
                        return true;
                    }
                }
                false
            }
        }
    }
    let mut work = atoms.to_vec();
    go(&mut work, diseqs)
}

/// Interpolates an unsatisfiable pair of difference-atom conjunctions.
/// `None` is `⊥` (an all-A negative cycle), an empty conjunction `⊤`.
///
/// The negative cycle of `A ∪ B` is cut into maximal same-side segments;
/// every A-segment `u ⇝ w` of weight `k` contributes the summary
/// `w ≤ u + k`. Segment endpoints border a B-edge (or close the cycle), so
/// they are constants occurring on both sides, or `0`.
pub fn idl_interpolate(a: &[DiffAtom], b: &[DiffAtom]) -> Result<Option<Vec<DiffAtom>>, IdlError> {
    let tagged: Vec<(DiffAtom, Side)> = a
        .iter()
        .map(|x| (x.clone(), Side::A))
        .chain(b.iter().map(|x| (x.clone(), Side::B)))
        .collect();
    let cycle = match idl_check_sat_tagged(&tagged) {
        IdlVerdict::Sat(_) => return Err(IdlError::NotUnsat),
        IdlVerdict::Unsat(cycle) => cycle,
    };

    if cycle.iter().all(|e| e.side == Side::A) {
        // A alone is inconsistent.
        return Ok(None);
    }
    if cycle.iter().all(|e| e.side == Side::B) {
        return Ok(Some(vec![]));
    }

    // Rotate so the cycle starts at an A/B boundary.
    let len = cycle.len();
    let start = (0..len)
        .find(|&i| cycle[(i + len - 1) % len].side != cycle[i].side)
        .expect("mixed cycle has a boundary");
    let rotated: Vec<&Edge> = (0..len).map(|i| &cycle[(start + i) % len]).collect();

    let mut summaries = Vec::new();
    let mut i = 0;
    while i < len {
        if rotated[i].side == Side::A {
            let seg_start = rotated[i].from.clone();
            let mut weight = 0;
            let mut end = rotated[i].to.clone();
            while i < len && rotated[i].side == Side::A {
                weight += rotated[i].weight;
                end = rotated[i].to.clone();
                i += 1;
            }
            summaries.push(DiffAtom::le(end, seg_start, weight));
        } else {
            i += 1;
        }
    }

    // The summaries must follow from A and contradict B; both are cheap to
    // confirm and a failure means a solver bug.
    for s in &summaries {
        let negated = DiffAtom::lt(s.rhs.clone(), s.lhs.clone(), 1 - s.n);
        let mut check = a.to_vec();
        check.push(negated);
        if idl_check_sat(&check).is_sat() {
            return Err(IdlError::InterpolantCheck(format!("A does not entail {s}")));
        }
    }
    let mut check = b.to_vec();
    check.extend(summaries.iter().cloned());
    if idl_check_sat(&check).is_sat() {
        return Err(IdlError::InterpolantCheck(
            "summaries do not contradict B".to_string(),
        ));
    }

    Ok(Some(summaries))
}

/// A disjunct of a quantifier-elimination result: the witness substituted
/// for the variable and the instantiated conjunction (`None` marks `⊥`,
/// an empty list `⊤`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QeDisjunct {
    pub witness: Term,
    pub formula: Option<Vec<DiffAtom>>,
}

/// `∃ var . ⋀ atoms` expressed as a disjunction of instances. An empty
/// disjunct list is `⊥`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QeResult {
    pub var: String,
    pub disjuncts: Vec<QeDisjunct>,
}

/// Bound on the eliminated variable: `base + off`.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bound {
    base: IdlVar,
    off: i64,
}

impl Bound {
    fn term(&self) -> Term {
        Term::offset(self.base.term(), self.off)
    }

    fn shifted(&self, d: i64) -> Bound {
        Bound { base: self.base.clone(), off: self.off + d }
    }
}

/// Substitutes `x := value` into an atom mentioning x and folds ground
/// results. Returns `Ok(None)` for `⊤`, `Err(())` for `⊥`.
fn subst_atom(atom: &DiffAtom, x: &IdlVar, value: &Bound) -> Result<Option<DiffAtom>, ()> {
    let (lhs, ln) = if atom.lhs == *x {
        (value.base.clone(), value.off)
    } else {
        (atom.lhs.clone(), 0)
    };
    let (rhs, rn) = if atom.rhs == *x {
        (value.base.clone(), value.off + atom.n)
    } else {
        (atom.rhs.clone(), atom.n)
    };
    // lhs + ln  ⋈  rhs + rn
    let n = rn - ln;
    if lhs == rhs {
        let holds = match atom.rel {
            DiffRel::Eq => n == 0,
            DiffRel::Lt => n > 0,
        };
        return if holds { Ok(None) } else { Err(()) };
    }
    Ok(Some(DiffAtom { lhs, rel: atom.rel, rhs, n }))
}

fn instantiate(atoms: &[&DiffAtom], x: &IdlVar, value: &Bound, rest: &[DiffAtom]) -> QeDisjunct {
    let mut out: Vec<DiffAtom> = rest.to_vec();
    for atom in atoms {
        match subst_atom(atom, x, value) {
            Ok(Some(a)) => out.push(a),
            Ok(None) => {}
            Err(()) => {
                return QeDisjunct { witness: value.term(), formula: None };
            }
        }
    }
    QeDisjunct { witness: value.term(), formula: Some(out) }
}

/// Single-variable quantifier elimination for a conjunction of difference
/// atoms.
///
/// With an equality bound present the variable is substituted away; with
/// bounds on one side only, shifted bound terms witness the (then trivial)
/// existential; with bounds on both sides the result is one disjunct per
/// lower bound, substituting its successor.
pub fn idl_qe(var: &str, atoms: &[DiffAtom]) -> QeResult {
    let x = IdlVar::Const(var.to_string());
    let mut eqs: Vec<Bound> = Vec::new();
    let mut uppers: Vec<Bound> = Vec::new();
    let mut lowers: Vec<Bound> = Vec::new();
    let mut x_atoms: Vec<&DiffAtom> = Vec::new();
    let mut rest: Vec<DiffAtom> = Vec::new();

    for atom in atoms {
        let mentions_x = atom.lhs == x || atom.rhs == x;
        if atom.lhs == x && atom.rhs == x {
            // Self-loops cannot be built by the smart constructors, but a
            // hand-made one still folds exactly.
            let holds = match atom.rel {
                DiffRel::Eq => atom.n == 0,
                DiffRel::Lt => atom.n > 0,
            };
            if holds {
                continue;
            }
            return QeResult { var: var.to_string(), disjuncts: vec![] };
        }
        if !mentions_x {
            rest.push(atom.clone());
            continue;
        }
        x_atoms.push(atom);
        if atom.lhs == x {
            // x ⋈ rhs + n
            let bound = Bound { base: atom.rhs.clone(), off: atom.n };
            match atom.rel {
                DiffRel::Eq => eqs.push(bound),
                DiffRel::Lt => uppers.push(bound),
            }
        } else {
            // lhs ⋈ x + n
            let bound = Bound { base: atom.lhs.clone(), off: -atom.n };
            match atom.rel {
                DiffRel::Eq => eqs.push(bound),
                DiffRel::Lt => lowers.push(bound),
            }
        }
    }

    let disjuncts = if let Some(eq) = eqs.first() {
        vec![instantiate(&x_atoms, &x, eq, &rest)]
    } else if x_atoms.is_empty() {
        vec![QeDisjunct { witness: Term::Zero, formula: Some(rest) }]
    } else if lowers.is_empty() {
        uppers
            .iter()
            .map(|u| instantiate(&x_atoms, &x, &u.shifted(-1), &rest))
            .collect()
    } else {
        lowers
            .iter()
            .map(|l| instantiate(&x_atoms, &x, &l.shifted(1), &rest))
            .collect()
    };

    QeResult { var: var.to_string(), disjuncts }
}
