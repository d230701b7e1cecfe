//! Quantifier-free interpolation for the union of ground EUF and integer
//! difference logic.
//!
//! Given two sets of ground formulas A and B whose conjunction is
//! unsatisfiable modulo EUF + IDL, the combiner produces a formula over
//! the symbols shared by A and B that follows from A and contradicts B.
//! Every emitted interpolant can be re-verified with the bundled
//! satisfiability engine, and the whole derivation is available as a
//! metarule proof tree.

pub mod color;
pub mod combine;
pub mod euf;
pub mod idl;
pub mod parse;
pub mod proof;
pub mod purify;
pub mod term;
pub mod theory;
pub mod utvpi;

pub use color::{classify_symbols, Color, ColoringError, Locality, Side, SymbolColoring};
pub use combine::{Assignment, CiOutcome, CombineError, Combiner, Config, VerifyReport};
pub use parse::{parse_formula, parse_problem, ParseError, ProblemFile};
pub use proof::{Interpolant, MetaRule, ProofError, ProofTree};
pub use purify::{eliminate_symbols, flatten_sigma0, purify, FreshGen, PurificationTrace};
pub use term::{
    set_constants,
    Atom, Formula, FormulaSet, Literal, LiteralClass, Signature, SignatureError, SymbolKind, Term,
    TheoryId,
};
pub use theory::{qe_equality_witness, EqualityWitness, SatCheck, TheorySolver};
