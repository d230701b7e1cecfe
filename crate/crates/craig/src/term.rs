//! Ground terms, literals and formulas over a two-theory signature.
//!
//! The term language mixes uninterpreted (EUF) function and predicate
//! symbols with the difference-logic vocabulary `0`, `succ`, `pred`, `<`.
//! Chains of `succ`/`pred` are kept in a canonical [`Term::Offset`] form,
//! so `succ(pred(t))` never survives construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Which component theory a symbol belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TheoryId {
    Euf,
    Idl,
}

impl fmt::Display for TheoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TheoryId::Euf => write!(f, "euf"),
            TheoryId::Idl => write!(f, "idl"),
        }
    }
}

/// What a declared name stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolKind {
    /// Theory function symbol with its arity.
    Func { theory: TheoryId, arity: usize },
    /// Theory predicate symbol with its arity.
    Pred { theory: TheoryId, arity: usize },
    /// Free constant.
    Const,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SignatureError {
    #[error("symbol `{0}` declared twice")]
    Redeclared(String),
    #[error("symbol `{0}` uses a reserved name")]
    ReservedName(String),
}

/// Name prefix reserved for constants invented by purification and term
/// sharing; user input must not use it.
pub const FRESH_PREFIX: &str = "_k";

pub fn is_reserved_name(name: &str) -> bool {
    name.starts_with(FRESH_PREFIX) || name.starts_with('$')
}

/// The symbol table: every name used in a problem, with its kind.
///
/// IDL's own vocabulary (`0`, `succ`, `pred`, `<`) is built into the term
/// language and does not appear here.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    symbols: BTreeMap<String, SymbolKind>,
    idl_enabled: bool,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn enable_idl(&mut self) {
        self.idl_enabled = true;
    }

    pub fn idl_enabled(&self) -> bool {
        self.idl_enabled
    }

    pub fn declare(&mut self, name: &str, kind: SymbolKind) -> Result<(), SignatureError> {
        if is_reserved_name(name) {
            return Err(SignatureError::ReservedName(name.to_string()));
        }
        self.declare_unchecked(name, kind)
    }

    /// Declaration path for internally generated constants; skips the
    /// reserved-prefix check but still refuses duplicates.
    pub fn declare_unchecked(&mut self, name: &str, kind: SymbolKind) -> Result<(), SignatureError> {
        if self.symbols.contains_key(name) {
            return Err(SignatureError::Redeclared(name.to_string()));
        }
        self.symbols.insert(name.to_string(), kind);
        Ok(())
    }

    pub fn kind_of(&self, name: &str) -> Option<SymbolKind> {
        self.symbols.get(name).copied()
    }

    pub fn constants(&self) -> impl Iterator<Item = &str> {
        self.symbols
            .iter()
            .filter(|(_, k)| matches!(k, SymbolKind::Const))
            .map(|(n, _)| n.as_str())
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, SymbolKind)> {
        self.symbols.iter().map(|(n, k)| (n.as_str(), *k))
    }
}

/// A ground term.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// Free constant.
    Const(String),
    /// The IDL constant `0`.
    Zero,
    /// Uninterpreted function application.
    App(String, Vec<Term>),
    /// `succ^n` (n > 0) or `pred^{-n}` (n < 0) applied to the inner term.
    /// Invariant: n != 0 and the inner term is never itself an `Offset`.
    Offset(Box<Term>, i64),
}

impl Term {
    pub const fn zero() -> Term {
        Term::Zero
    }

    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Term {
        Term::App(name.into(), args)
    }

    /// Smart constructor; collapses nested offsets so `succ(pred(t)) = t`
    /// holds by construction.
    pub fn offset(base: Term, n: i64) -> Term {
        match base {
            Term::Offset(inner, m) => Term::offset(*inner, m + n),
            other if n == 0 => other,
            other => Term::Offset(Box::new(other), n),
        }
    }

    pub fn succ(base: Term) -> Term {
        Term::offset(base, 1)
    }

    pub fn pred(base: Term) -> Term {
        Term::offset(base, -1)
    }

    /// Integer literal `n`, i.e. `0` shifted by `n`.
    pub fn int(n: i64) -> Term {
        Term::offset(Term::Zero, n)
    }

    /// Splits an IDL-pure term into its base (constant or zero) and offset.
    /// Returns `None` when the term contains a function application.
    pub fn as_idl_offset(&self) -> Option<(&Term, i64)> {
        match self {
            Term::Const(_) | Term::Zero => Some((self, 0)),
            Term::Offset(inner, n) => match inner.as_ref() {
                Term::Const(_) | Term::Zero => Some((inner, *n)),
                _ => None,
            },
            Term::App(..) => None,
        }
    }

    /// True when the term contains no EUF application anywhere.
    pub fn is_idl_pure(&self) -> bool {
        match self {
            Term::Const(_) | Term::Zero => true,
            Term::App(..) => false,
            Term::Offset(inner, _) => inner.is_idl_pure(),
        }
    }

    /// True when the term contains no IDL symbol (`0`, offsets) anywhere.
    pub fn is_euf_pure(&self) -> bool {
        match self {
            Term::Const(_) => true,
            Term::Zero | Term::Offset(..) => false,
            Term::App(_, args) => args.iter().all(Term::is_euf_pure),
        }
    }

    pub fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(c) => {
                out.insert(c.clone());
            }
            Term::Zero => {}
            Term::App(_, args) => args.iter().for_each(|t| t.collect_constants(out)),
            Term::Offset(inner, _) => inner.collect_constants(out),
        }
    }

    pub fn collect_apps(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Const(_) | Term::Zero => {}
            Term::App(f, args) => {
                out.insert(f.clone());
                args.iter().for_each(|t| t.collect_apps(out));
            }
            Term::Offset(inner, _) => inner.collect_apps(out),
        }
    }

    /// All subterms, self included, outermost first.
    pub fn subterms(&self) -> Vec<&Term> {
        let mut out = vec![self];
        match self {
            Term::Const(_) | Term::Zero => {}
            Term::App(_, args) => {
                for a in args {
                    out.extend(a.subterms());
                }
            }
            Term::Offset(inner, _) => out.extend(inner.subterms()),
        }
        out
    }

    /// Simultaneous substitution of whole subterms. Matching subterms are
    /// replaced and not re-visited; offsets re-normalize.
    pub fn substitute(&self, map: &BTreeMap<Term, Term>) -> Term {
        if let Some(repl) = map.get(self) {
            return repl.clone();
        }
        match self {
            Term::Const(_) | Term::Zero => self.clone(),
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
            Term::Offset(inner, n) => Term::offset(inner.substitute(map), *n),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => write!(f, "{c}"),
            Term::Zero => write!(f, "0"),
            Term::App(name, args) => {
                write!(f, "({name}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Term::Offset(inner, n) => match inner.as_ref() {
                Term::Zero => write!(f, "{n}"),
                t if *n >= 0 => write!(f, "(+ {t} {n})"),
                t => write!(f, "(- {t} {})", -n),
            },
        }
    }
}

/// An atomic formula.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    True,
    False,
    Eq(Term, Term),
    Lt(Term, Term),
    Pred(String, Vec<Term>),
}

impl Atom {
    pub fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self {
            Atom::True | Atom::False => {}
            Atom::Eq(l, r) | Atom::Lt(l, r) => {
                l.collect_constants(out);
                r.collect_constants(out);
            }
            Atom::Pred(_, args) => args.iter().for_each(|t| t.collect_constants(out)),
        }
    }

    pub fn terms(&self) -> Vec<&Term> {
        match self {
            Atom::True | Atom::False => vec![],
            Atom::Eq(l, r) | Atom::Lt(l, r) => vec![l, r],
            Atom::Pred(_, args) => args.iter().collect(),
        }
    }

    pub fn substitute(&self, map: &BTreeMap<Term, Term>) -> Atom {
        match self {
            Atom::True => Atom::True,
            Atom::False => Atom::False,
            Atom::Eq(l, r) => Atom::Eq(l.substitute(map), r.substitute(map)),
            Atom::Lt(l, r) => Atom::Lt(l.substitute(map), r.substitute(map)),
            Atom::Pred(p, args) => {
                Atom::Pred(p.clone(), args.iter().map(|a| a.substitute(map)).collect())
            }
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::True => write!(f, "true"),
            Atom::False => write!(f, "false"),
            Atom::Eq(l, r) => write!(f, "(= {l} {r})"),
            Atom::Lt(l, r) => write!(f, "(< {l} {r})"),
            Atom::Pred(p, args) => {
                if args.is_empty() {
                    write!(f, "{p}")
                } else {
                    write!(f, "({p}")?;
                    for a in args {
                        write!(f, " {a}")?;
                    }
                    write!(f, ")")
                }
            }
        }
    }
}

/// A possibly negated atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub positive: bool,
    pub atom: Atom,
}

/// Theory membership of a pure literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralClass {
    /// Only free constants (or `true`/`false`): belongs to both theories.
    Shared,
    Euf,
    Idl,
    /// Mentions non-constant symbols of both theories; must be purified.
    Mixed,
}

impl Literal {
    pub fn pos(atom: Atom) -> Literal {
        Literal { positive: true, atom }
    }

    pub fn neg(atom: Atom) -> Literal {
        Literal { positive: false, atom }
    }

    pub fn negated(&self) -> Literal {
        Literal { positive: !self.positive, atom: self.atom.clone() }
    }

    pub fn is_false(&self) -> bool {
        matches!(
            self,
            Literal { positive: true, atom: Atom::False } | Literal { positive: false, atom: Atom::True }
        )
    }

    pub fn is_true(&self) -> bool {
        matches!(
            self,
            Literal { positive: true, atom: Atom::True } | Literal { positive: false, atom: Atom::False }
        )
    }

    /// Classifies by the non-constant symbols occurring in the atom.
    pub fn class(&self) -> LiteralClass {
        match &self.atom {
            Atom::True | Atom::False => LiteralClass::Shared,
            Atom::Pred(_, args) => {
                if args.iter().all(Term::is_euf_pure) {
                    LiteralClass::Euf
                } else {
                    LiteralClass::Mixed
                }
            }
            Atom::Lt(l, r) => {
                if l.is_idl_pure() && r.is_idl_pure() {
                    LiteralClass::Idl
                } else {
                    LiteralClass::Mixed
                }
            }
            Atom::Eq(l, r) => {
                let consts_only = matches!(l, Term::Const(_)) && matches!(r, Term::Const(_));
                if consts_only {
                    LiteralClass::Shared
                } else if l.is_euf_pure() && r.is_euf_pure() {
                    LiteralClass::Euf
                } else if l.is_idl_pure() && r.is_idl_pure() {
                    LiteralClass::Idl
                } else {
                    LiteralClass::Mixed
                }
            }
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

/// A ground boolean combination of literals.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Lit(Literal),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
}

/// A set of formulas, read conjunctively. `BTreeSet` keeps iteration
/// deterministic and deduplicates on insertion.
pub type FormulaSet = BTreeSet<Formula>;

impl Formula {
    pub const TRUE: Formula = Formula::Lit(Literal { positive: true, atom: Atom::True });
    pub const FALSE: Formula = Formula::Lit(Literal { positive: true, atom: Atom::False });

    pub fn lit(l: Literal) -> Formula {
        Formula::Lit(l)
    }

    pub fn atom(a: Atom) -> Formula {
        Formula::Lit(Literal::pos(a))
    }

    pub fn negated_atom(a: Atom) -> Formula {
        Formula::Lit(Literal::neg(a))
    }

    pub fn and(mut conjuncts: Vec<Formula>) -> Formula {
        match conjuncts.len() {
            0 => Formula::TRUE,
            1 => conjuncts.pop().unwrap(),
            _ => Formula::And(conjuncts),
        }
    }

    pub fn or(mut disjuncts: Vec<Formula>) -> Formula {
        match disjuncts.len() {
            0 => Formula::FALSE,
            1 => disjuncts.pop().unwrap(),
            _ => Formula::Or(disjuncts),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        match f {
            Formula::Lit(l) => Formula::Lit(l.negated()),
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn is_false_lit(&self) -> bool {
        matches!(self, Formula::Lit(l) if l.is_false())
    }

    pub fn as_literal(&self) -> Option<&Literal> {
        match self {
            Formula::Lit(l) => Some(l),
            _ => None,
        }
    }

    pub fn collect_constants(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Lit(l) => l.atom.collect_constants(out),
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_constants(out)),
            Formula::Not(f) => f.collect_constants(out),
        }
    }

    pub fn constants(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_constants(&mut out);
        out
    }

    /// Distinct atoms occurring anywhere in the formula, `true`/`false`
    /// excluded.
    pub fn collect_atoms(&self, out: &mut BTreeSet<Atom>) {
        match self {
            Formula::Lit(l) => {
                if !matches!(l.atom, Atom::True | Atom::False) {
                    out.insert(l.atom.clone());
                }
            }
            Formula::And(fs) | Formula::Or(fs) => fs.iter().for_each(|f| f.collect_atoms(out)),
            Formula::Not(f) => f.collect_atoms(out),
        }
    }

    /// All literal occurrences, with polarity folded through negations.
    pub fn collect_literals(&self, out: &mut Vec<Literal>) {
        fn walk(f: &Formula, polarity: bool, out: &mut Vec<Literal>) {
            match f {
                Formula::Lit(l) => {
                    let mut l = l.clone();
                    if !polarity {
                        l = l.negated();
                    }
                    out.push(l);
                }
                Formula::And(fs) | Formula::Or(fs) => {
                    fs.iter().for_each(|g| walk(g, polarity, out))
                }
                Formula::Not(g) => walk(g, !polarity, out),
            }
        }
        walk(self, true, out);
    }

    pub fn substitute(&self, map: &BTreeMap<Term, Term>) -> Formula {
        match self {
            Formula::Lit(l) => Formula::Lit(Literal {
                positive: l.positive,
                atom: l.atom.substitute(map),
            }),
            Formula::And(fs) => Formula::And(fs.iter().map(|f| f.substitute(map)).collect()),
            Formula::Or(fs) => Formula::Or(fs.iter().map(|f| f.substitute(map)).collect()),
            Formula::Not(f) => Formula::Not(Box::new(f.substitute(map))),
        }
    }

    /// Truth value under a (total) atom assignment; `None` if some atom is
    /// unassigned.
    pub fn eval(&self, assignment: &BTreeMap<Atom, bool>) -> Option<bool> {
        match self {
            Formula::Lit(l) => {
                let v = match l.atom {
                    Atom::True => true,
                    Atom::False => false,
                    _ => *assignment.get(&l.atom)?,
                };
                Some(if l.positive { v } else { !v })
            }
            Formula::And(fs) => {
                let mut all = true;
                for f in fs {
                    match f.eval(assignment) {
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
                let mut none = true;
                for f in fs {
                    match f.eval(assignment) {
                        Some(true) => return Some(true),
                        Some(false) => {}
                        None => none = false,
                    }
                }
                if none {
                    Some(false)
                } else {
                    None
                }
            }
            Formula::Not(f) => f.eval(assignment).map(|v| !v),
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Lit(l) => write!(f, "{l}"),
            Formula::And(fs) => {
                write!(f, "(and")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Or(fs) => {
                write!(f, "(or")?;
                for g in fs {
                    write!(f, " {g}")?;
                }
                write!(f, ")")
            }
            Formula::Not(g) => write!(f, "(not {g})"),
        }
    }
}

/// Substitution over a whole formula set.
pub fn substitute_set(set: &FormulaSet, map: &BTreeMap<Term, Term>) -> FormulaSet {
    set.iter().map(|f| f.substitute(map)).collect()
}

pub fn set_constants(set: &FormulaSet) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for f in set {
        f.collect_constants(&mut out);
    }
    out
}
