//! Purification of mixed literals by renaming alien subterms, plus the
//! reduction that eliminates designated uninterpreted symbols from a
//! problem: flattening to defining atoms and replacing them by
//! functional-consistency clauses.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::color::Side;
use crate::proof::{ChainStep, MetaRule};
use crate::term::{
    is_reserved_name, set_constants, Atom, Formula, FormulaSet, Literal, LiteralClass, Signature,
    SignatureError, SymbolKind, Term, TheoryId, FRESH_PREFIX,
};

#[derive(Debug, Error)]
pub enum PurifyError {
    #[error("input uses the reserved fresh-constant prefix: `{0}`")]
    ReservedPrefix(String),
    #[error("formula set is not flat: {0}")]
    NotFlat(String),
    #[error(transparent)]
    Signature(#[from] SignatureError),
}

/// Deterministic fresh-name source; names use the reserved `_k` prefix.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FreshGen {
    counter: u64,
}

impl FreshGen {
    pub fn new() -> Self {
        Self::default()
    }

    /// A generator whose names cannot collide with any of the given ones.
    pub fn beyond<'a>(names: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counter = 0;
        for name in names {
            if let Some(rest) = name.strip_prefix(FRESH_PREFIX) {
                if let Ok(n) = rest.parse::<u64>() {
                    counter = counter.max(n + 1);
                }
            }
        }
        FreshGen { counter }
    }

    pub fn fresh(&mut self) -> String {
        let name = format!("{FRESH_PREFIX}{}", self.counter);
        self.counter += 1;
        name
    }
}

/// Which side a purification constant was introduced on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    A,
    B,
    Both,
}

/// Introduced definitions in order: fresh constant, the term it names,
/// and the side it serves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PurificationTrace {
    pub steps: Vec<(String, Term, TraceSide)>,
}

fn head_theory(t: &Term) -> Option<TheoryId> {
    match t {
        Term::Const(_) => None,
        Term::Zero | Term::Offset(..) => Some(TheoryId::Idl),
        Term::App(..) => Some(TheoryId::Euf),
    }
}

/// Innermost subterm of `t` whose head theory clashes with its context.
fn find_alien(t: &Term, ctx: Option<TheoryId>) -> Option<Term> {
    match t {
        Term::Const(_) => None,
        Term::Zero => {
            if ctx == Some(TheoryId::Euf) {
                Some(t.clone())
            } else {
                None
            }
        }
        Term::App(_, args) => {
            for a in args {
                if let Some(found) = find_alien(a, Some(TheoryId::Euf)) {
                    return Some(found);
                }
            }
            if ctx == Some(TheoryId::Idl) {
                Some(t.clone())
            } else {
                None
            }
        }
        Term::Offset(inner, _) => {
            if let Some(found) = find_alien(inner, Some(TheoryId::Idl)) {
                return Some(found);
            }
            if ctx == Some(TheoryId::Euf) {
                Some(t.clone())
            } else {
                None
            }
        }
    }
}

fn find_alien_in_atom(atom: &Atom) -> Option<Term> {
    match atom {
        Atom::True | Atom::False => None,
        Atom::Lt(l, r) => {
            find_alien(l, Some(TheoryId::Idl)).or_else(|| find_alien(r, Some(TheoryId::Idl)))
        }
        Atom::Pred(_, args) => args
            .iter()
            .find_map(|a| find_alien(a, Some(TheoryId::Euf))),
        Atom::Eq(l, r) => {
            // The left side's structure decides the atom's theory when the
            // sides clash; the right side then counts as alien.
            let atom_theory = head_theory(l).or_else(|| head_theory(r));
            find_alien(l, atom_theory).or_else(|| find_alien(r, atom_theory))
        }
    }
}

fn find_alien_in_formula(f: &Formula) -> Option<Term> {
    let mut lits = Vec::new();
    f.collect_literals(&mut lits);
    lits.iter().find_map(|l| find_alien_in_atom(&l.atom))
}

fn purify_side(
    side: Side,
    set: &mut FormulaSet,
    other: &FormulaSet,
    sig: &mut Signature,
    gen: &mut FreshGen,
    trace: &mut PurificationTrace,
    chain: &mut Vec<ChainStep>,
) -> Result<(), PurifyError> {
    let label = |set: &FormulaSet, other: &FormulaSet| match side {
        Side::A => (set.clone(), other.clone()),
        Side::B => (other.clone(), set.clone()),
    };
    loop {
        let Some(alien) = set.iter().find_map(find_alien_in_formula) else {
            return Ok(());
        };
        let name = gen.fresh();
        sig.declare_unchecked(&name, SymbolKind::Const)?;
        let def = Formula::atom(Atom::Eq(Term::constant(name.clone()), alien.clone()));
        let mut map = BTreeMap::new();
        map.insert(alien.clone(), Term::constant(name.clone()));

        // Define_X introduces the definition, Redplus_X adds the renamed
        // copies, Redminus_X drops the originals.
        let (a0, b0) = label(set, other);
        let define = match side {
            Side::A => MetaRule::Define1 { name: name.clone(), def: alien.clone() },
            Side::B => MetaRule::Define2 { name: name.clone(), def: alien.clone() },
        };
        chain.push(ChainStep { a: a0, b: b0, rule: define });
        set.insert(def.clone());

        let affected: Vec<Formula> = set
            .iter()
            .filter(|f| **f != def && find_term(f, &alien))
            .cloned()
            .collect();
        for f in &affected {
            let renamed = f.substitute(&map);
            if !set.contains(&renamed) {
                let (a0, b0) = label(set, other);
                let rule = match side {
                    Side::A => MetaRule::Redplus1 { psi: renamed.clone() },
                    Side::B => MetaRule::Redplus2 { psi: renamed.clone() },
                };
                chain.push(ChainStep { a: a0, b: b0, rule });
                set.insert(renamed);
            }
        }
        for f in &affected {
            let (a0, b0) = label(set, other);
            let rule = match side {
                Side::A => MetaRule::Redminus1 { psi: f.clone() },
                Side::B => MetaRule::Redminus2 { psi: f.clone() },
            };
            chain.push(ChainStep { a: a0, b: b0, rule });
            set.remove(f);
        }
        trace.steps.push((
            name,
            alien,
            match side {
                Side::A => TraceSide::A,
                Side::B => TraceSide::B,
            },
        ));
    }
}

fn find_term(f: &Formula, needle: &Term) -> bool {
    let mut lits = Vec::new();
    f.collect_literals(&mut lits);
    lits.iter()
        .any(|l| l.atom.terms().iter().any(|t| t.subterms().contains(&needle)))
}

/// Renames alien subterms until every literal is pure, innermost first.
/// Returns the purified pair, the introduced definitions, and the
/// metarule chain justifying the rewrite. Inputs must not use the
/// reserved fresh-name prefix.
pub fn purify(
    a: &FormulaSet,
    b: &FormulaSet,
    sig: &mut Signature,
    gen: &mut FreshGen,
) -> Result<(FormulaSet, FormulaSet, PurificationTrace, Vec<ChainStep>), PurifyError> {
    for c in set_constants(a).union(&set_constants(b)) {
        if c.starts_with(FRESH_PREFIX) || is_reserved_name(c) {
            return Err(PurifyError::ReservedPrefix(c.clone()));
        }
    }
    purify_unchecked(a, b, sig, gen)
}

/// Purification entry for internally produced sets, which legitimately
/// carry earlier fresh constants; the generator must be past them.
pub(crate) fn purify_unchecked(
    a: &FormulaSet,
    b: &FormulaSet,
    sig: &mut Signature,
    gen: &mut FreshGen,
) -> Result<(FormulaSet, FormulaSet, PurificationTrace, Vec<ChainStep>), PurifyError> {
    let mut a = a.clone();
    let mut b = b.clone();
    let mut trace = PurificationTrace::default();
    let mut chain = Vec::new();
    purify_side(Side::A, &mut a, &b, sig, gen, &mut trace, &mut chain)?;
    purify_side(Side::B, &mut b, &a, sig, gen, &mut trace, &mut chain)?;
    debug_assert!(is_pure(&a) && is_pure(&b));
    Ok((a, b, trace, chain))
}

/// Every literal of every member is theory-pure.
pub fn is_pure(set: &FormulaSet) -> bool {
    set.iter().all(|f| {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        lits.iter().all(|l| l.class() != LiteralClass::Mixed)
    })
}

/// A flat defining literal for the symbol set: `f(c̄) = c`, `c = f(c̄)`,
/// `P(c̄)`, or `¬P(c̄)` with all arguments (and the value) plain constants
/// that are not themselves in `sigma0`.
fn as_defining_literal<'a>(f: &'a Formula, sigma0: &BTreeSet<String>) -> Option<&'a Literal> {
    let lit = f.as_literal()?;
    let const_args = |args: &[Term]| args.iter().all(|t| matches!(t, Term::Const(_)));
    match &lit.atom {
        Atom::Pred(p, args) if sigma0.contains(p) && const_args(args) => Some(lit),
        Atom::Eq(l, r) if lit.positive => {
            let flat_app = |t: &Term| match t {
                Term::App(h, args) => sigma0.contains(h) && const_args(args),
                _ => false,
            };
            let plain = |t: &Term| matches!(t, Term::Const(_));
            if (flat_app(l) && plain(r)) || (flat_app(r) && plain(l)) {
                Some(lit)
            } else {
                None
            }
        }
        _ => None,
    }
}

fn mentions_sigma0(f: &Formula, sigma0: &BTreeSet<String>) -> bool {
    let mut lits = Vec::new();
    f.collect_literals(&mut lits);
    lits.iter().any(|l| {
        let in_pred = matches!(&l.atom, Atom::Pred(p, _) if sigma0.contains(p));
        let mut apps = BTreeSet::new();
        for t in l.atom.terms() {
            t.collect_apps(&mut apps);
        }
        in_pred || apps.iter().any(|h| sigma0.contains(h))
    })
}

/// Innermost Σ0 application whose arguments are all constants and which
/// sits in a non-defining position.
fn find_flatten_target(set: &FormulaSet, sigma0: &BTreeSet<String>) -> Option<Term> {
    fn scan(t: &Term, sigma0: &BTreeSet<String>) -> Option<Term> {
        if let Term::App(h, args) = t {
            for a in args {
                if let Some(found) = scan(a, sigma0) {
                    return Some(found);
                }
            }
            if sigma0.contains(h) && args.iter().all(|a| matches!(a, Term::Const(_))) {
                return Some(t.clone());
            }
        }
        if let Term::Offset(inner, _) = t {
            return scan(inner, sigma0);
        }
        None
    }
    for f in set {
        if as_defining_literal(f, sigma0).is_some() {
            continue;
        }
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in &lits {
            for t in l.atom.terms() {
                if let Some(found) = scan(t, sigma0) {
                    return Some(found);
                }
            }
        }
    }
    None
}

fn assign_atom(f: &Formula, atom: &Atom, value: bool) -> Formula {
    match f {
        Formula::Lit(l) => {
            if &l.atom == atom {
                let v = if l.positive { value } else { !value };
                if v {
                    Formula::TRUE
                } else {
                    Formula::FALSE
                }
            } else {
                f.clone()
            }
        }
        Formula::And(fs) => Formula::And(fs.iter().map(|g| assign_atom(g, atom, value)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|g| assign_atom(g, atom, value)).collect()),
        Formula::Not(g) => Formula::Not(Box::new(assign_atom(g, atom, value))),
    }
}

/// Flattens a formula set with respect to a set of uninterpreted symbols:
/// afterwards those symbols occur only in defining literals `f(c̄) = c`,
/// `P(c̄)`, `¬P(c̄)`. Predicate atoms still buried under boolean structure
/// are resolved by case-splitting, one output branch per polarity choice.
pub fn flatten_sigma0(
    set: &FormulaSet,
    sigma0: &BTreeSet<String>,
    sig: &mut Signature,
    gen: &mut FreshGen,
) -> Result<Vec<FormulaSet>, PurifyError> {
    let mut work = set.clone();

    // Function flattening.
    while let Some(target) = find_flatten_target(&work, sigma0) {
        let name = gen.fresh();
        sig.declare_unchecked(&name, SymbolKind::Const)?;
        let fresh = Term::constant(name);
        let mut map = BTreeMap::new();
        map.insert(target.clone(), fresh.clone());
        work = work.iter().map(|f| f.substitute(&map)).collect();
        work.insert(Formula::atom(Atom::Eq(target, fresh)));
    }

    // Predicate atoms that are not whole literal members need a polarity
    // guess.
    let mut ambiguous: BTreeSet<Atom> = BTreeSet::new();
    for f in &work {
        if as_defining_literal(f, sigma0).is_some() {
            continue;
        }
        let mut atoms = BTreeSet::new();
        f.collect_atoms(&mut atoms);
        for atom in atoms {
            if let Atom::Pred(p, _) = &atom {
                if sigma0.contains(p) {
                    ambiguous.insert(atom);
                }
            }
        }
    }

    let mut branches = vec![work];
    for atom in &ambiguous {
        let mut next = Vec::new();
        for branch in &branches {
            for value in [true, false] {
                let mut out: FormulaSet = branch
                    .iter()
                    .map(|f| crate::proof::simplify(&assign_atom(f, atom, value)))
                    .filter(|f| *f != Formula::TRUE)
                    .collect();
                let lit = Formula::Lit(Literal { positive: value, atom: atom.clone() });
                out.insert(lit);
                next.push(out);
            }
        }
        branches = next;
    }
    Ok(branches)
}

/// Checks flatness with respect to `sigma0`.
pub fn is_flat(set: &FormulaSet, sigma0: &BTreeSet<String>) -> bool {
    set.iter().all(|f| {
        as_defining_literal(f, sigma0).is_some() || !mentions_sigma0(f, sigma0)
    })
}

/// Replaces the defining atoms of a flat set by functional-consistency
/// clauses: equal arguments force equal values for each pair of `f`-atoms,
/// and contradictory `P`/`¬P` pairs force distinct arguments. The output
/// mentions no `sigma0` symbol, is entailed by the input, and is
/// equisatisfiable with it.
pub fn eliminate_symbols(
    set: &FormulaSet,
    sigma0: &BTreeSet<String>,
) -> Result<FormulaSet, PurifyError> {
    if !is_flat(set, sigma0) {
        let offender = set
            .iter()
            .find(|f| as_defining_literal(f, sigma0).is_none() && mentions_sigma0(f, sigma0))
            .map(|f| f.to_string())
            .unwrap_or_default();
        return Err(PurifyError::NotFlat(offender));
    }

    let mut out: FormulaSet = set
        .iter()
        .filter(|f| as_defining_literal(f, sigma0).is_none())
        .cloned()
        .collect();

    // Defining atoms, grouped by symbol.
    type PredOccurrences = (Vec<Vec<Term>>, Vec<Vec<Term>>);
    let mut fun_atoms: BTreeMap<String, Vec<(Vec<Term>, Term)>> = BTreeMap::new();
    let mut pred_atoms: BTreeMap<String, PredOccurrences> = BTreeMap::new();
    for f in set {
        let Some(lit) = as_defining_literal(f, sigma0) else { continue };
        match &lit.atom {
            Atom::Eq(l, r) => {
                let (app, val) = if matches!(l, Term::App(..)) { (l, r) } else { (r, l) };
                let Term::App(h, args) = app else { unreachable!() };
                fun_atoms
                    .entry(h.clone())
                    .or_default()
                    .push((args.clone(), val.clone()));
            }
            Atom::Pred(p, args) => {
                let entry = pred_atoms.entry(p.clone()).or_default();
                if lit.positive {
                    entry.0.push(args.clone());
                } else {
                    entry.1.push(args.clone());
                }
            }
            _ => unreachable!(),
        }
    }

    let arg_clause = |xs: &[Term], ys: &[Term]| -> Vec<Formula> {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| Formula::negated_atom(Atom::Eq(x.clone(), y.clone())))
            .collect()
    };

    for atoms in fun_atoms.values() {
        for (i, (args1, val1)) in atoms.iter().enumerate() {
            for (args2, val2) in atoms.iter().skip(i + 1) {
                let mut clause = arg_clause(args1, args2);
                clause.push(Formula::atom(Atom::Eq(val1.clone(), val2.clone())));
                out.insert(crate::proof::simplify(&Formula::or(clause)));
            }
        }
    }
    for (pos, neg) in pred_atoms.values() {
        for args1 in pos {
            for args2 in neg {
                let clause = arg_clause(args1, args2);
                out.insert(crate::proof::simplify(&Formula::or(clause)));
            }
        }
    }
    Ok(out)
}
