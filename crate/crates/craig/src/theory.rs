//! The component-theory interface: satisfiability, interpolation, and
//! equality-witness computation for one theory, plus the generic adapter
//! that derives equality witnesses from a quantifier-elimination hook.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::color::{ColoringError, Locality, SymbolColoring};
use crate::euf::{self, EufError};
use crate::idl::{self, DiffAtom, IdlError, Normalized};
use crate::term::{Atom, Formula, Literal, Term, TheoryId};

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error(transparent)]
    Euf(#[from] EufError),
    #[error(transparent)]
    Idl(#[from] IdlError),
    #[error(transparent)]
    Coloring(#[from] ColoringError),
    #[error("equality witness failed: {0}")]
    Witness(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatCheck {
    Sat,
    Unsat,
}

impl SatCheck {
    pub fn is_sat(self) -> bool {
        self == SatCheck::Sat
    }
}

/// Result of equality interpolation: terms v̄ such that the input jointly
/// entails `(ā ∩ v̄ ≠ ∅) ∨ (b̄ ∩ v̄ ≠ ∅)`, and θ with `A ⊢ θ ∨ ā∩v̄≠∅`
/// and `θ ∧ B ⊢ b̄∩v̄≠∅`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqualityWitness {
    pub terms: Vec<Term>,
    pub theta: Formula,
}

/// Decision, interpolation, and equality-interpolation entry points for
/// one component theory. All inputs are conjunctions of pure literals of
/// that theory; boolean structure is the combiner's business.
pub trait TheorySolver {
    fn theory(&self) -> TheoryId;

    fn convex(&self) -> bool;

    fn check_sat(&self, lits: &[Literal]) -> Result<SatCheck, TheoryError>;

    /// `lits ∪ { l ≠ r | (l, r) ∈ pairs }`.
    fn check_sat_with_diseqs(
        &self,
        lits: &[Literal],
        pairs: &[(Term, Term)],
    ) -> Result<SatCheck, TheoryError>;

    /// Defined whenever `a ∪ b` is unsatisfiable in this theory.
    fn interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        coloring: &SymbolColoring,
    ) -> Result<Formula, TheoryError>;

    /// Defined whenever `a ∪ b` is satisfiable but forcing all of
    /// `a_strict` apart from all of `b_strict` is not.
    fn equality_interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        a_strict: &[String],
        b_strict: &[String],
        coloring: &SymbolColoring,
    ) -> Result<EqualityWitness, TheoryError>;
}

/// One disjunct of a literal-level QE step: the witness substituted for
/// the variable and the instantiated conjunction.
pub type QeDisjunctLits = (Term, Vec<Literal>);

/// Derives witness terms from a quantifier-elimination procedure.
///
/// Eliminating all of `vars` from `delta2` yields a disjunction of
/// instances; the returned tuple juxtaposes the (back-substituted) terms
/// plugged in for the eliminated variables across all disjuncts. Together
/// with a `delta1` satisfying `delta1 ∧ delta2 ⊢ ȳ1 ∩ ȳ2 ≠ ∅`, the
/// juxtaposition satisfies `delta1 ∧ delta2 ⊢ ȳ1 ∩ v̄ ≠ ∅`.
///
/// Errors if the elimination leaves no disjunct, which means `∃ȳ2 delta2`
/// was unsatisfiable and the caller violated the precondition.
pub fn qe_equality_witness(
    qe: impl Fn(&str, &[Literal]) -> Result<Vec<QeDisjunctLits>, TheoryError>,
    delta2: &[Literal],
    vars: &[String],
) -> Result<Vec<Term>, TheoryError> {
    struct Leaf {
        bindings: Vec<(String, Term)>,
        lits: Vec<Literal>,
    }
    let mut leaves = vec![Leaf { bindings: Vec::new(), lits: delta2.to_vec() }];
    for var in vars {
        let mut next = Vec::new();
        for leaf in &leaves {
            for (witness, instance) in qe(var, &leaf.lits)? {
                let mut bindings = leaf.bindings.clone();
                bindings.push((var.clone(), witness));
                next.push(Leaf { bindings, lits: instance });
            }
        }
        leaves = next;
    }
    if leaves.is_empty() {
        return Err(TheoryError::Witness(
            "quantifier elimination produced an empty disjunction; the input was unsatisfiable"
                .to_string(),
        ));
    }
    let mut out = BTreeSet::new();
    for leaf in &leaves {
        // Later-eliminated variables may occur inside earlier witnesses;
        // substitute back to front.
        let mut resolved: std::collections::BTreeMap<Term, Term> = Default::default();
        for (var, term) in leaf.bindings.iter().rev() {
            let t = term.substitute(&resolved);
            resolved.insert(Term::constant(var.clone()), t);
        }
        for (var, _) in &leaf.bindings {
            out.insert(resolved[&Term::constant(var.clone())].clone());
        }
    }
    Ok(out.into_iter().collect())
}

/// EUF solver plug-in. Convex; witnesses come from the explanation graph.
#[derive(Debug, Default, Clone, Copy)]
pub struct EufSolver;

impl TheorySolver for EufSolver {
    fn theory(&self) -> TheoryId {
        TheoryId::Euf
    }

    fn convex(&self) -> bool {
        true
    }

    fn check_sat(&self, lits: &[Literal]) -> Result<SatCheck, TheoryError> {
        Ok(match euf::euf_check_sat(lits)? {
            euf::EufVerdict::Sat => SatCheck::Sat,
            euf::EufVerdict::Unsat { .. } => SatCheck::Unsat,
        })
    }

    fn check_sat_with_diseqs(
        &self,
        lits: &[Literal],
        pairs: &[(Term, Term)],
    ) -> Result<SatCheck, TheoryError> {
        let mut all = lits.to_vec();
        for (l, r) in pairs {
            all.push(Literal::neg(Atom::Eq(l.clone(), r.clone())));
        }
        self.check_sat(&all)
    }

    fn interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        coloring: &SymbolColoring,
    ) -> Result<Formula, TheoryError> {
        Ok(euf::euf_interpolate(a, b, coloring)?)
    }

    fn equality_interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        a_strict: &[String],
        b_strict: &[String],
        coloring: &SymbolColoring,
    ) -> Result<EqualityWitness, TheoryError> {
        let w = euf::euf_equality_witness(a, b, a_strict, b_strict, coloring)?;
        // Convex single-witness shape: p = 1 and θ = ⊤.
        Ok(EqualityWitness { terms: vec![w.term], theta: Formula::TRUE })
    }
}

/// IDL solver plug-in. Non-convex; equality witnesses are derived from
/// the quantifier-elimination procedure.
#[derive(Debug, Default, Clone, Copy)]
pub struct IdlSolver;

fn atoms_of(lits: &[Literal]) -> Result<Option<Vec<DiffAtom>>, TheoryError> {
    Ok(match idl::normalize_conj(lits)? {
        Normalized::Bottom => None,
        Normalized::Top => Some(vec![]),
        Normalized::Atoms(atoms) => Some(atoms),
    })
}

fn diseq_of(l: &Term, r: &Term) -> Result<Option<DiffAtom>, TheoryError> {
    // l ≠ r over IDL terms; `None` when it folds to ⊤ (distinct offsets of
    // one base). A ⊥ fold is reported through the Err slot by reusing the
    // atom: the caller treats it as an unsatisfiable branch.
    match idl::idl_normalize(&Literal::pos(Atom::Eq(l.clone(), r.clone())))? {
        Normalized::Top => Err(TheoryError::Witness(format!(
            "disequality {l} != {r} is trivially false"
        ))),
        Normalized::Bottom => Ok(None),
        Normalized::Atoms(atoms) => {
            debug_assert_eq!(atoms.len(), 1);
            Ok(atoms.into_iter().next())
        }
    }
}

impl IdlSolver {
    fn qe_hook(var: &str, lits: &[Literal]) -> Result<Vec<QeDisjunctLits>, TheoryError> {
        let Some(atoms) = atoms_of(lits)? else {
            return Ok(vec![]);
        };
        let result = idl::idl_qe(var, &atoms);
        Ok(result
            .disjuncts
            .into_iter()
            .filter_map(|d| {
                d.formula.map(|atoms| {
                    let lits = atoms.iter().map(|a| Literal::pos(a.atom())).collect();
                    (d.witness, lits)
                })
            })
            .collect())
    }
}

impl TheorySolver for IdlSolver {
    fn theory(&self) -> TheoryId {
        TheoryId::Idl
    }

    fn convex(&self) -> bool {
        false
    }

    fn check_sat(&self, lits: &[Literal]) -> Result<SatCheck, TheoryError> {
        Ok(match atoms_of(lits)? {
            None => SatCheck::Unsat,
            Some(atoms) => {
                if idl::idl_check_sat(&atoms).is_sat() {
                    SatCheck::Sat
                } else {
                    SatCheck::Unsat
                }
            }
        })
    }

    fn check_sat_with_diseqs(
        &self,
        lits: &[Literal],
        pairs: &[(Term, Term)],
    ) -> Result<SatCheck, TheoryError> {
        let Some(atoms) = atoms_of(lits)? else {
            return Ok(SatCheck::Unsat);
        };
        let mut diseqs = Vec::new();
        for (l, r) in pairs {
            match diseq_of(l, r) {
                Ok(Some(d)) => diseqs.push(d),
                Ok(None) => {}
                Err(_) => return Ok(SatCheck::Unsat),
            }
        }
        Ok(if idl::idl_check_sat_with_diseqs(&atoms, &diseqs) {
            SatCheck::Sat
        } else {
            SatCheck::Unsat
        })
    }

    fn interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        coloring: &SymbolColoring,
    ) -> Result<Formula, TheoryError> {
        let _ = coloring;
        let Some(a_atoms) = atoms_of(a)? else {
            return Ok(Formula::FALSE);
        };
        let Some(b_atoms) = atoms_of(b)? else {
            return Ok(Formula::TRUE);
        };
        Ok(match idl::idl_interpolate(&a_atoms, &b_atoms)? {
            None => Formula::FALSE,
            Some(summaries) => {
                Formula::and(summaries.iter().map(|s| Formula::atom(s.atom())).collect())
            }
        })
    }

    fn equality_interpolate(
        &self,
        a: &[Literal],
        b: &[Literal],
        a_strict: &[String],
        b_strict: &[String],
        coloring: &SymbolColoring,
    ) -> Result<EqualityWitness, TheoryError> {
        let witnesses = qe_equality_witness(Self::qe_hook, b, b_strict)?;
        let mut witnesses: Vec<Term> = witnesses
            .into_iter()
            .filter(|t| {
                matches!(coloring.term_locality(t), Ok(Locality::AbCommon))
            })
            .collect();
        if witnesses.is_empty() {
            return Err(TheoryError::Witness(
                "quantifier elimination produced no AB-common witness terms".to_string(),
            ));
        }

        // The juxtaposition is usually larger than needed; drop witnesses
        // while the strict constants of A stay pinned to the remainder.
        // Fewer witnesses mean fewer Share branches and a smaller θ.
        let joint: Vec<Literal> = a.iter().chain(b).cloned().collect();
        let pinned = |ws: &[Term], this: &IdlSolver| -> Result<bool, TheoryError> {
            let pairs: Vec<(Term, Term)> = a_strict
                .iter()
                .flat_map(|c| ws.iter().map(move |w| (Term::constant(c.clone()), w.clone())))
                .collect();
            Ok(!this.check_sat_with_diseqs(&joint, &pairs)?.is_sat())
        };
        if !pinned(&witnesses, self)? {
            return Err(TheoryError::Witness(
                "witness tuple does not pin the A-strict constants".to_string(),
            ));
        }
        let mut i = 0;
        while witnesses.len() > 1 && i < witnesses.len() {
            let mut trial = witnesses.clone();
            trial.remove(i);
            if pinned(&trial, self)? {
                witnesses = trial;
            } else {
                i += 1;
            }
        }

        // θ interpolates (A ∪ {ā ∩ v̄ = ∅}, B). The added disequalities
        // split into strict bounds; θ is the disjunction of the branch
        // interpolants.
        let Some(a_atoms) = atoms_of(a)? else {
            return Ok(EqualityWitness { terms: witnesses, theta: Formula::FALSE });
        };
        let Some(b_atoms) = atoms_of(b)? else {
            return Err(TheoryError::Witness("B is unsatisfiable".to_string()));
        };

        let mut diseqs: Vec<DiffAtom> = Vec::new();
        for ai in a_strict {
            for v in &witnesses {
                match diseq_of(&Term::constant(ai.clone()), v) {
                    Ok(Some(d)) => diseqs.push(d),
                    Ok(None) => {}
                    // A trivially-false disequality makes its whole branch
                    // set empty; a_i is literally one of the witnesses,
                    // which cannot happen since a_i is strict.
                    Err(e) => return Err(e),
                }
            }
        }

        let mut thetas: Vec<Formula> = Vec::new();
        let mut stack = vec![(a_atoms.clone(), 0usize)];
        while let Some((atoms, i)) = stack.pop() {
            if i == diseqs.len() {
                let theta = match idl::idl_interpolate(&atoms, &b_atoms)? {
                    None => Formula::FALSE,
                    Some(summaries) => Formula::and(
                        summaries.iter().map(|s| Formula::atom(s.atom())).collect(),
                    ),
                };
                thetas.push(theta);
                continue;
            }
            let d = &diseqs[i];
            for split in [
                DiffAtom::lt(d.lhs.clone(), d.rhs.clone(), d.n),
                DiffAtom::lt(d.rhs.clone(), d.lhs.clone(), -d.n),
            ] {
                let mut next = atoms.clone();
                next.push(split);
                stack.push((next, i + 1));
            }
        }
        thetas.sort();
        thetas.dedup();
        Ok(EqualityWitness { terms: witnesses, theta: Formula::or(thetas) })
    }
}

/// Fixed solver lineup for the combined theory.
pub fn solvers() -> [&'static dyn TheorySolver; 2] {
    [&EufSolver, &IdlSolver]
}

pub fn solver_for(theory: TheoryId) -> &'static dyn TheorySolver {
    match theory {
        TheoryId::Euf => &EufSolver,
        TheoryId::Idl => &IdlSolver,
    }
}
