//! Symbol coloring: which side of an interpolation problem owns a symbol.
//!
//! Theory symbols are always shared. A free constant is AB-common exactly
//! when it occurs on both sides; otherwise it is strict to the side it
//! occurs on. Expressions inherit a locality from the constants they
//! mention.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::term::{set_constants, Atom, Formula, FormulaSet, Literal, Signature, Term};

/// One side of an interpolation problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::A => write!(f, "A"),
            Side::B => write!(f, "B"),
        }
    }
}

/// Provenance of a single symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    AbCommon,
    AStrict,
    BStrict,
}

/// Locality of a term, literal, or formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Locality {
    AbCommon,
    AStrict,
    BStrict,
    AbMixed,
}

impl fmt::Display for Locality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Locality::AbCommon => "AB-common",
            Locality::AStrict => "A-strict",
            Locality::BStrict => "B-strict",
            Locality::AbMixed => "AB-mixed",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColoringError {
    #[error("symbol `{0}` does not occur in the colored problem")]
    UnknownSymbol(String),
}

/// Symbol-to-color map for one (A, B) pair. Theory symbols (declared
/// functions and predicates, and the IDL builtins) are always AB-common;
/// only free constants carry side information.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolColoring {
    colors: BTreeMap<String, Color>,
}

/// Colors every symbol occurring in `a` or `b`.
pub fn classify_symbols(a: &FormulaSet, b: &FormulaSet, sig: &Signature) -> SymbolColoring {
    let a_consts = set_constants(a);
    let b_consts = set_constants(b);
    let mut colors = BTreeMap::new();
    for c in a_consts.union(&b_consts) {
        let color = match (a_consts.contains(c), b_consts.contains(c)) {
            (true, true) => Color::AbCommon,
            (true, false) => Color::AStrict,
            (false, true) => Color::BStrict,
            (false, false) => unreachable!(),
        };
        colors.insert(c.clone(), color);
    }
    // Occurring theory symbols are recorded too, all AB-common.
    let mut apps = BTreeSet::new();
    for f in a.iter().chain(b.iter()) {
        let mut lits = Vec::new();
        f.collect_literals(&mut lits);
        for l in lits {
            for t in l.atom.terms() {
                t.collect_apps(&mut apps);
            }
            if let Atom::Pred(p, _) = &l.atom {
                apps.insert(p.clone());
            }
        }
    }
    for name in apps {
        if sig.kind_of(&name).is_some() {
            colors.insert(name, Color::AbCommon);
        } else {
            // Undeclared application heads still get an entry so that
            // locality lookups stay total.
            colors.insert(name, Color::AbCommon);
        }
    }
    SymbolColoring { colors }
}

impl SymbolColoring {
    pub fn empty() -> Self {
        SymbolColoring { colors: BTreeMap::new() }
    }

    pub fn color_of(&self, name: &str) -> Result<Color, ColoringError> {
        self.colors
            .get(name)
            .copied()
            .ok_or_else(|| ColoringError::UnknownSymbol(name.to_string()))
    }

    pub fn constants_with(&self, color: Color) -> Vec<String> {
        self.colors
            .iter()
            .filter(|(_, c)| **c == color)
            .map(|(n, _)| n.clone())
            .collect()
    }

    fn fold_constants(&self, consts: &BTreeSet<String>) -> Result<Locality, ColoringError> {
        let mut has_a = false;
        let mut has_b = false;
        for c in consts {
            match self.color_of(c)? {
                Color::AStrict => has_a = true,
                Color::BStrict => has_b = true,
                Color::AbCommon => {}
            }
        }
        Ok(match (has_a, has_b) {
            (false, false) => Locality::AbCommon,
            (true, false) => Locality::AStrict,
            (false, true) => Locality::BStrict,
            (true, true) => Locality::AbMixed,
        })
    }

    pub fn term_locality(&self, t: &Term) -> Result<Locality, ColoringError> {
        let mut consts = BTreeSet::new();
        t.collect_constants(&mut consts);
        self.fold_constants(&consts)
    }

    pub fn literal_locality(&self, l: &Literal) -> Result<Locality, ColoringError> {
        let mut consts = BTreeSet::new();
        l.atom.collect_constants(&mut consts);
        self.fold_constants(&consts)
    }

    pub fn formula_locality(&self, f: &Formula) -> Result<Locality, ColoringError> {
        let mut consts = BTreeSet::new();
        f.collect_constants(&mut consts);
        self.fold_constants(&consts)
    }

    /// True for AB-common and side-strict alike, false only for the other
    /// side and mixed. "A-local" means definable from A's vocabulary.
    pub fn is_a_local(&self, loc: Locality) -> bool {
        matches!(loc, Locality::AbCommon | Locality::AStrict)
    }

    pub fn is_b_local(&self, loc: Locality) -> bool {
        matches!(loc, Locality::AbCommon | Locality::BStrict)
    }
}
