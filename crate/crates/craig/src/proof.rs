//! Metarule refutation trees and top-down interpolant extraction.
//!
//! A refutation is a tree whose root carries the original pair (A, B),
//! whose leaves contain `⊥`, and where every node is the conclusion of a
//! metarule with its children as premises. Each rule carries an
//! instruction mapping the premise interpolants to a conclusion
//! interpolant; folding the instructions from the leaves to the root
//! yields an interpolant for the original pair.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::color::{classify_symbols, ColoringError, Locality, SymbolColoring};
use crate::term::{Atom, Formula, FormulaSet, Signature, Term};

/// A metarule application with its payload.
///
/// `Define1`/`Define2` relate labels that differ by one definition `a = t`
/// with `a` occurring nowhere else; read toward the leaves they introduce
/// the definition (purification), read toward the root they eliminate a
/// constant that has been renamed away (term sharing).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaRule {
    Close1,
    Close2,
    Propagate1 { psi: Formula },
    Propagate2 { psi: Formula },
    Define0 { name: String, def: Term },
    Define1 { name: String, def: Term },
    Define2 { name: String, def: Term },
    Disjunction1 { disjuncts: Vec<Formula> },
    Disjunction2 { disjuncts: Vec<Formula> },
    Redplus1 { psi: Formula },
    Redplus2 { psi: Formula },
    Redminus1 { psi: Formula },
    Redminus2 { psi: Formula },
}

impl MetaRule {
    pub fn tag(&self) -> &'static str {
        match self {
            MetaRule::Close1 => "close1",
            MetaRule::Close2 => "close2",
            MetaRule::Propagate1 { .. } => "propagate1",
            MetaRule::Propagate2 { .. } => "propagate2",
            MetaRule::Define0 { .. } => "define0",
            MetaRule::Define1 { .. } => "define1",
            MetaRule::Define2 { .. } => "define2",
            MetaRule::Disjunction1 { .. } => "disjunction1",
            MetaRule::Disjunction2 { .. } => "disjunction2",
            MetaRule::Redplus1 { .. } => "redplus1",
            MetaRule::Redplus2 { .. } => "redplus2",
            MetaRule::Redminus1 { .. } => "redminus1",
            MetaRule::Redminus2 { .. } => "redminus2",
        }
    }

    fn payload(&self) -> String {
        match self {
            MetaRule::Close1 | MetaRule::Close2 => String::new(),
            MetaRule::Propagate1 { psi }
            | MetaRule::Propagate2 { psi }
            | MetaRule::Redplus1 { psi }
            | MetaRule::Redplus2 { psi }
            | MetaRule::Redminus1 { psi }
            | MetaRule::Redminus2 { psi } => format!(" {psi}"),
            MetaRule::Define0 { name, def }
            | MetaRule::Define1 { name, def }
            | MetaRule::Define2 { name, def } => format!(" (= {name} {def})"),
            MetaRule::Disjunction1 { disjuncts } | MetaRule::Disjunction2 { disjuncts } => {
                let mut s = String::new();
                for d in disjuncts {
                    s.push_str(&format!(" {d}"));
                }
                s
            }
        }
    }
}

/// A node of a metarule refutation: the (A, B) label, the rule this node
/// concludes, and the rule's premises as children.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofTree {
    pub a: FormulaSet,
    pub b: FormulaSet,
    pub rule: MetaRule,
    pub children: Vec<ProofTree>,
}

/// An extracted interpolant together with the root coloring it was
/// checked against.
#[derive(Debug, Clone)]
pub struct Interpolant {
    pub formula: Formula,
    pub coloring: SymbolColoring,
}

/// One link of a linear metarule chain: the rule concluded at this label.
/// The premise is the next step's label (or the subtree the chain is
/// eventually assembled onto).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub a: FormulaSet,
    pub b: FormulaSet,
    pub rule: MetaRule,
}

/// Folds a chain onto a tip subtree, outermost step first.
pub fn assemble_chain(steps: Vec<ChainStep>, tip: ProofTree) -> ProofTree {
    steps.into_iter().rev().fold(tip, |child, s| ProofTree {
        a: s.a,
        b: s.b,
        rule: s.rule,
        children: vec![child],
    })
}

#[derive(Debug, Error)]
pub enum ProofError {
    #[error("malformed proof at {node} ({rule}): {reason}")]
    Malformed { node: String, rule: &'static str, reason: String },
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("satisfiability engine failed during soundness check: {0}")]
    Engine(String),
}

fn err(path: &str, rule: &'static str, reason: impl Into<String>) -> ProofError {
    ProofError::Malformed { node: path.to_string(), rule, reason: reason.into() }
}

fn contains_false(set: &FormulaSet) -> bool {
    set.iter().any(Formula::is_false_lit)
}

fn with(set: &FormulaSet, f: &Formula) -> FormulaSet {
    let mut out = set.clone();
    out.insert(f.clone());
    out
}

fn occurs(name: &str, a: &FormulaSet, b: &FormulaSet) -> bool {
    let probe = |set: &FormulaSet| {
        set.iter().any(|f| f.constants().contains(name))
    };
    probe(a) || probe(b)
}

fn definition(name: &str, def: &Term) -> Formula {
    Formula::atom(Atom::Eq(Term::constant(name.to_string()), def.clone()))
}

/// Literal-level constant folding: reflexive equalities and ground
/// difference bounds collapse to `⊤`/`⊥`.
fn fold_literal(l: &crate::term::Literal) -> Formula {
    use crate::idl::{idl_normalize, Normalized};
    use crate::term::Literal;
    if let Atom::Eq(x, y) = &l.atom {
        if x == y {
            return if l.positive { Formula::TRUE } else { Formula::FALSE };
        }
    }
    // Negated equalities fold through their positive form.
    let probe = if !l.positive && matches!(l.atom, Atom::Eq(..)) {
        Literal::pos(l.atom.clone())
    } else {
        l.clone()
    };
    let inverted = probe.positive != l.positive;
    if let Ok(normalized) = idl_normalize(&probe) {
        match (normalized, inverted) {
            (Normalized::Top, false) | (Normalized::Bottom, true) => return Formula::TRUE,
            (Normalized::Bottom, false) | (Normalized::Top, true) => return Formula::FALSE,
            _ => {}
        }
    }
    Formula::Lit(l.clone())
}

/// Removes `⊤`/`⊥` units, trivially true or false literals, and
/// idempotent duplicates; preserves logical equivalence.
pub fn simplify(f: &Formula) -> Formula {
    match f {
        Formula::Lit(l) => fold_literal(l),
        Formula::Not(inner) => Formula::not(simplify(inner)),
        Formula::And(fs) => {
            let mut out: Vec<Formula> = Vec::new();
            for g in fs {
                let s = simplify(g);
                match s {
                    Formula::And(inner) => {
                        for h in inner {
                            if !out.contains(&h) {
                                out.push(h);
                            }
                        }
                    }
                    _ if s == Formula::TRUE => {}
                    _ if s == Formula::FALSE => return Formula::FALSE,
                    _ => {
                        if !out.contains(&s) {
                            out.push(s);
                        }
                    }
                }
            }
            Formula::and(out)
        }
        Formula::Or(fs) => {
            let mut out: Vec<Formula> = Vec::new();
            for g in fs {
                let s = simplify(g);
                match s {
                    Formula::Or(inner) => {
                        for h in inner {
                            if !out.contains(&h) {
                                out.push(h);
                            }
                        }
                    }
                    _ if s == Formula::FALSE => {}
                    _ if s == Formula::TRUE => return Formula::TRUE,
                    _ => {
                        if !out.contains(&s) {
                            out.push(s);
                        }
                    }
                }
            }
            Formula::or(out)
        }
    }
}

impl ProofTree {
    pub fn leaf(a: FormulaSet, b: FormulaSet, rule: MetaRule) -> ProofTree {
        ProofTree { a, b, rule, children: vec![] }
    }

    fn coloring(&self, sig: &Signature) -> SymbolColoring {
        classify_symbols(&self.a, &self.b, sig)
    }

    /// Structural validation: leaf shape, child labels matching each
    /// rule's premises, and the syntactic provisos (freshness, locality of
    /// payloads). Semantic provisos are `check_local_soundness`'s job.
    pub fn validate(&self, sig: &Signature) -> Result<(), ProofError> {
        self.validate_at("root", sig)
    }

    fn expect_children(&self, path: &str, n: usize) -> Result<(), ProofError> {
        if self.children.len() != n {
            return Err(err(
                path,
                self.rule.tag(),
                format!("expected {n} premises, found {}", self.children.len()),
            ));
        }
        Ok(())
    }

    fn validate_at(&self, path: &str, sig: &Signature) -> Result<(), ProofError> {
        let coloring = self.coloring(sig);
        let tag = self.rule.tag();
        match &self.rule {
            MetaRule::Close1 => {
                self.expect_children(path, 0)?;
                if !contains_false(&self.a) {
                    return Err(err(path, tag, "leaf without ⊥ in A"));
                }
            }
            MetaRule::Close2 => {
                self.expect_children(path, 0)?;
                if !contains_false(&self.b) {
                    return Err(err(path, tag, "leaf without ⊥ in B"));
                }
            }
            MetaRule::Propagate1 { psi } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                if coloring.formula_locality(psi)? != Locality::AbCommon {
                    return Err(err(path, tag, format!("{psi} is not AB-common")));
                }
                if child.a != self.a || child.b != with(&self.b, psi) {
                    return Err(err(path, tag, "premise label must add ψ to B"));
                }
            }
            MetaRule::Propagate2 { psi } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                if coloring.formula_locality(psi)? != Locality::AbCommon {
                    return Err(err(path, tag, format!("{psi} is not AB-common")));
                }
                if child.b != self.b || child.a != with(&self.a, psi) {
                    return Err(err(path, tag, "premise label must add ψ to A"));
                }
            }
            MetaRule::Define0 { name, def } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                if coloring.term_locality(def)? != Locality::AbCommon {
                    return Err(err(path, tag, format!("{def} is not AB-common")));
                }
                if occurs(name, &self.a, &self.b) || def.subterms().iter().any(
                    |s| matches!(s, Term::Const(c) if c == name),
                ) {
                    return Err(err(path, tag, format!("{name} is not fresh")));
                }
                let d = definition(name, def);
                if child.a != with(&self.a, &d) || child.b != with(&self.b, &d) {
                    return Err(err(path, tag, "premise label must add the definition to both sides"));
                }
            }
            MetaRule::Define1 { name, def } | MetaRule::Define2 { name, def } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                let on_a = matches!(self.rule, MetaRule::Define1 { .. });
                let d = definition(name, def);
                let (conc_side, prem_side, conc_other, prem_other) = if on_a {
                    (&self.a, &child.a, &self.b, &child.b)
                } else {
                    (&self.b, &child.b, &self.a, &child.a)
                };
                if conc_other != prem_other {
                    return Err(err(path, tag, "the untouched side must not change"));
                }
                let introduction =
                    *prem_side == with(conc_side, &d) && !conc_side.contains(&d);
                let elimination =
                    *conc_side == with(prem_side, &d) && !prem_side.contains(&d);
                if introduction {
                    // a fresh w.r.t. the conclusion
                    if occurs(name, &self.a, &self.b)
                        || def.subterms().iter().any(|s| matches!(s, Term::Const(c) if c == name))
                    {
                        return Err(err(path, tag, format!("{name} is not fresh")));
                    }
                    let loc = coloring.term_locality(def);
                    // def's constants occur in the conclusion by side-locality
                    let ok = match loc {
                        Ok(l) => {
                            if on_a {
                                coloring.is_a_local(l)
                            } else {
                                coloring.is_b_local(l)
                            }
                        }
                        Err(_) => false,
                    };
                    if !ok {
                        return Err(err(path, tag, format!("{def} is not side-local")));
                    }
                } else if elimination {
                    // a must be renamed away: absent from the premise entirely
                    if occurs(name, &child.a, &child.b)
                        || def.subterms().iter().any(|s| matches!(s, Term::Const(c) if c == name))
                    {
                        return Err(err(
                            path,
                            tag,
                            format!("{name} still occurs outside its definition"),
                        ));
                    }
                } else {
                    return Err(err(
                        path,
                        tag,
                        "labels must differ by exactly the definition on the rule's side",
                    ));
                }
            }
            MetaRule::Disjunction1 { disjuncts } | MetaRule::Disjunction2 { disjuncts } => {
                if disjuncts.is_empty() {
                    return Err(err(path, tag, "no disjuncts"));
                }
                self.expect_children(path, disjuncts.len())?;
                let on_a = matches!(self.rule, MetaRule::Disjunction1 { .. });
                for (k, (d, child)) in disjuncts.iter().zip(&self.children).enumerate() {
                    let loc = coloring.formula_locality(d)?;
                    let local = if on_a {
                        coloring.is_a_local(loc)
                    } else {
                        coloring.is_b_local(loc)
                    };
                    if !local {
                        return Err(err(path, tag, format!("disjunct {d} is not side-local")));
                    }
                    let ok = if on_a {
                        child.a == with(&self.a, d) && child.b == self.b
                    } else {
                        child.b == with(&self.b, d) && child.a == self.a
                    };
                    if !ok {
                        return Err(err(path, tag, format!("premise {k} label mismatch")));
                    }
                }
            }
            MetaRule::Redplus1 { psi } | MetaRule::Redplus2 { psi } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                let on_a = matches!(self.rule, MetaRule::Redplus1 { .. });
                let loc = coloring.formula_locality(psi)?;
                let local =
                    if on_a { coloring.is_a_local(loc) } else { coloring.is_b_local(loc) };
                if !local {
                    return Err(err(path, tag, format!("{psi} is not side-local")));
                }
                let ok = if on_a {
                    child.a == with(&self.a, psi) && child.b == self.b
                } else {
                    child.b == with(&self.b, psi) && child.a == self.a
                };
                if !ok {
                    return Err(err(path, tag, "premise label must add ψ to the rule's side"));
                }
            }
            MetaRule::Redminus1 { psi } | MetaRule::Redminus2 { psi } => {
                self.expect_children(path, 1)?;
                let child = &self.children[0];
                let on_a = matches!(self.rule, MetaRule::Redminus1 { .. });
                let ok = if on_a {
                    self.a == with(&child.a, psi)
                        && !child.a.contains(psi)
                        && child.b == self.b
                } else {
                    self.b == with(&child.b, psi)
                        && !child.b.contains(psi)
                        && child.a == self.a
                };
                if !ok {
                    return Err(err(path, tag, "premise label must drop ψ from the rule's side"));
                }
            }
        }
        for (k, child) in self.children.iter().enumerate() {
            child.validate_at(&format!("{path}.{k}"), sig)?;
        }
        Ok(())
    }

    /// Applies this node's instruction to the premise interpolants.
    fn instruction(&self, premises: &[Formula], path: &str) -> Result<Formula, ProofError> {
        Ok(match &self.rule {
            MetaRule::Close1 => Formula::FALSE,
            MetaRule::Close2 => Formula::TRUE,
            MetaRule::Propagate1 { psi } => {
                Formula::and(vec![psi.clone(), premises[0].clone()])
            }
            MetaRule::Propagate2 { psi } => {
                Formula::or(vec![Formula::not(psi.clone()), premises[0].clone()])
            }
            MetaRule::Define0 { name, def } => {
                let mut map = BTreeMap::new();
                map.insert(Term::constant(name.clone()), def.clone());
                premises[0].substitute(&map)
            }
            MetaRule::Define1 { name, def } | MetaRule::Define2 { name, def } => {
                let _ = def;
                if premises[0].constants().contains(name) {
                    return Err(err(
                        path,
                        self.rule.tag(),
                        format!("premise interpolant mentions the local constant {name}"),
                    ));
                }
                premises[0].clone()
            }
            MetaRule::Disjunction1 { .. } => Formula::or(premises.to_vec()),
            MetaRule::Disjunction2 { .. } => Formula::and(premises.to_vec()),
            MetaRule::Redplus1 { .. }
            | MetaRule::Redplus2 { .. }
            | MetaRule::Redminus1 { .. }
            | MetaRule::Redminus2 { .. } => premises[0].clone(),
        })
    }

    fn extract_at(&self, path: &str) -> Result<Formula, ProofError> {
        let premises: Vec<Formula> = self
            .children
            .iter()
            .enumerate()
            .map(|(k, c)| c.extract_at(&format!("{path}.{k}")))
            .collect::<Result<_, _>>()?;
        self.instruction(&premises, path)
    }

    /// Validates the tree and folds the instructions into the root
    /// interpolant, simplified and checked AB-common for the root label.
    pub fn extract_interpolant(&self, sig: &Signature) -> Result<Interpolant, ProofError> {
        self.validate(sig)?;
        let raw = self.extract_at("root")?;
        let formula = simplify(&raw);
        let coloring = self.coloring(sig);
        match coloring.formula_locality(&formula)? {
            Locality::AbCommon => Ok(Interpolant { formula, coloring }),
            other => Err(err(
                "root",
                self.rule.tag(),
                format!("extracted interpolant is {other}, not AB-common"),
            )),
        }
    }

    /// Checks the three interpolant conditions at this node, given that
    /// the premises satisfy theirs: the node's own interpolant follows
    /// from A, contradicts B, and is AB-common. `sat` decides
    /// satisfiability of a formula set modulo the combined theory.
    pub fn check_local_soundness(
        &self,
        sig: &Signature,
        sat: &mut dyn FnMut(&FormulaSet) -> Result<bool, String>,
    ) -> Result<bool, ProofError> {
        let theta = simplify(&self.extract_at("node")?);
        let coloring = self.coloring(sig);
        if coloring.formula_locality(&theta)? != Locality::AbCommon {
            return Ok(false);
        }
        let mut a_side = self.a.clone();
        a_side.insert(Formula::not(theta.clone()));
        if sat(&a_side).map_err(ProofError::Engine)? {
            return Ok(false);
        }
        let mut b_side = self.b.clone();
        b_side.insert(theta);
        if sat(&b_side).map_err(ProofError::Engine)? {
            return Ok(false);
        }
        Ok(true)
    }

    pub fn nodes(&self) -> Vec<&ProofTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    /// S-expression dump of the tree with each node's rule, payload, and
    /// extracted interpolant.
    pub fn trace(&self) -> String {
        fn go(node: &ProofTree, indent: usize, out: &mut String) {
            let theta = node
                .extract_at("trace")
                .map(|f| simplify(&f).to_string())
                .unwrap_or_else(|e| format!("<error: {e}>"));
            let pad = "  ".repeat(indent);
            out.push_str(&format!(
                "{pad}(rule {}{} (interpolant {}))\n",
                node.rule.tag(),
                node.rule.payload(),
                theta
            ));
            for c in &node.children {
                go(c, indent + 1, out);
            }
        }
        let mut out = String::new();
        go(self, 0, &mut out);
        out
    }
}

impl fmt::Display for ProofTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.trace())
    }
}
