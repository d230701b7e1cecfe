//! Quantifier elimination for unit-two-variable-per-inequality constraints
//! `a·u + b·w ⋈ n` with unit coefficients.
//!
//! This strictly extends the difference-atom language with negated
//! variables; it backs the equality-witness machinery's tests and is not
//! registered as a combinable solver. Coefficient-2 forms produced by
//! substitution fold exactly over the integers, so no residual atom ever
//! survives construction.

use std::fmt;

use crate::idl::IdlVar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum URel {
    Eq,
    Lt,
}

/// `a·u + b·w ⋈ n` with `a, b ∈ {-1, 0, 1}`. Zero-coefficient slots carry
/// `IdlVar::Zero`; the constructors keep `a != 0` whenever possible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtvpiAtom {
    pub a: i64,
    pub u: IdlVar,
    pub b: i64,
    pub w: IdlVar,
    pub rel: URel,
    pub n: i64,
}

/// Constructor outcome: ground atoms fold immediately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UFold {
    Atom(UtvpiAtom),
    True,
    False,
}

fn div_floor(a: i64, b: i64) -> i64 {
    let q = a / b;
    if a % b != 0 && (a < 0) != (b < 0) {
        q - 1
    } else {
        q
    }
}

impl UtvpiAtom {
    /// Builds `a·u + b·w ⋈ n`, merging equal variables, dropping `0`
    /// slots, and folding ground or coefficient-2 forms exactly.
    pub fn build(mut a: i64, mut u: IdlVar, mut b: i64, mut w: IdlVar, rel: URel, n: i64) -> UFold {
        assert!((-1..=1).contains(&a) && (-1..=1).contains(&b));
        if u == IdlVar::Zero {
            a = 0;
        }
        if w == IdlVar::Zero {
            b = 0;
        }
        if a == 0 {
            u = IdlVar::Zero;
        }
        if b == 0 {
            w = IdlVar::Zero;
        }
        if u == w && a != 0 {
            // Merge into a single slot; the coefficient may become 0 or ±2.
            let coeff = a + b;
            match coeff {
                0 => {
                    a = 0;
                    b = 0;
                    u = IdlVar::Zero;
                    w = IdlVar::Zero;
                }
                1 | -1 => {
                    a = coeff;
                    b = 0;
                    w = IdlVar::Zero;
                }
                2 | -2 => {
                    // 2v ⋈ n resp. -2v ⋈ n, made unit-coefficient again by
                    // exact integer division.
                    let v = u;
                    return match (coeff, rel) {
                        (2, URel::Lt) => {
                            // 2v < n  <=>  v ≤ floor((n-1)/2)
                            UtvpiAtom::build(1, v, 0, IdlVar::Zero, URel::Lt, div_floor(n - 1, 2) + 1)
                        }
                        (-2, URel::Lt) => {
                            // -2v < n  <=>  v ≥ ceil((1-n)/2)  <=>  -v < 1 - ceil((1-n)/2)
                            let bound = 1 - div_floor(2 - n, 2);
                            UtvpiAtom::build(-1, v, 0, IdlVar::Zero, URel::Lt, bound)
                        }
                        (2, URel::Eq) if n % 2 == 0 => {
                            UtvpiAtom::build(1, v, 0, IdlVar::Zero, URel::Eq, n / 2)
                        }
                        (-2, URel::Eq) if n % 2 == 0 => {
                            UtvpiAtom::build(-1, v, 0, IdlVar::Zero, URel::Eq, n / 2)
                        }
                        (_, URel::Eq) => UFold::False,
                        _ => unreachable!(),
                    };
                }
                _ => unreachable!(),
            }
        }
        if a == 0 && b != 0 {
            // Keep the occupied slot first.
            std::mem::swap(&mut a, &mut b);
            std::mem::swap(&mut u, &mut w);
        }
        if a == 0 && b == 0 {
            let holds = match rel {
                URel::Eq => n == 0,
                URel::Lt => n > 0,
            };
            return if holds { UFold::True } else { UFold::False };
        }
        UFold::Atom(UtvpiAtom { a, u, b, w, rel, n })
    }

    pub fn holds(&self, value: impl Fn(&IdlVar) -> i64) -> bool {
        let lhs = self.a * value(&self.u) + self.b * value(&self.w);
        match self.rel {
            URel::Eq => lhs == self.n,
            URel::Lt => lhs < self.n,
        }
    }

    pub fn vars(&self) -> Vec<&IdlVar> {
        let mut out = Vec::new();
        if self.a != 0 {
            out.push(&self.u);
        }
        if self.b != 0 {
            out.push(&self.w);
        }
        out
    }
}

impl fmt::Display for UtvpiAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rel = match self.rel {
            URel::Eq => "=",
            URel::Lt => "<",
        };
        let slot = |c: i64, v: &IdlVar| match c {
            0 => String::new(),
            1 => format!(" + {v}"),
            -1 => format!(" - {v}"),
            _ => unreachable!(),
        };
        write!(f, "(0{}{} {rel} {})", slot(self.a, &self.u), slot(self.b, &self.w), self.n)
    }
}

/// Witness value `m ± t` (or just `m`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtvpiWitness {
    pub m: i64,
    /// Sign of the variable part; 0 when there is none.
    pub sign: i64,
    pub var: IdlVar,
}

impl UtvpiWitness {
    pub fn eval(&self, value: impl Fn(&IdlVar) -> i64) -> i64 {
        self.m + self.sign * value(&self.var)
    }

    fn shifted(&self, d: i64) -> UtvpiWitness {
        UtvpiWitness { m: self.m + d, sign: self.sign, var: self.var.clone() }
    }
}

impl fmt::Display for UtvpiWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "{}", self.m),
            1 => write!(f, "({} + {})", self.m, self.var),
            -1 => write!(f, "({} - {})", self.m, self.var),
            _ => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtvpiDisjunct {
    pub witness: UtvpiWitness,
    /// `None` marks `⊥`; an empty list is `⊤`.
    pub formula: Option<Vec<UtvpiAtom>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtvpiQeResult {
    pub var: String,
    pub disjuncts: Vec<UtvpiDisjunct>,
}

/// Substitutes `x := m + sign·v` into an atom that mentions x.
fn subst(atom: &UtvpiAtom, x: &IdlVar, wit: &UtvpiWitness) -> UFold {
    let (mut a, mut u) = (atom.a, atom.u.clone());
    let (mut b, mut w) = (atom.b, atom.w.clone());
    let mut n = atom.n;
    if a != 0 && u == *x {
        n -= a * wit.m;
        a *= wit.sign;
        u = wit.var.clone();
    }
    if b != 0 && w == *x {
        n -= b * wit.m;
        b *= wit.sign;
        w = wit.var.clone();
    }
    UtvpiAtom::build(a, u, b, w, atom.rel, n)
}

fn instantiate(
    x_atoms: &[&UtvpiAtom],
    x: &IdlVar,
    wit: &UtvpiWitness,
    rest: &[UtvpiAtom],
) -> UtvpiDisjunct {
    let mut out = rest.to_vec();
    for atom in x_atoms {
        match subst(atom, x, wit) {
            UFold::Atom(a) => out.push(a),
            UFold::True => {}
            UFold::False => return UtvpiDisjunct { witness: wit.clone(), formula: None },
        }
    }
    UtvpiDisjunct { witness: wit.clone(), formula: Some(out) }
}

/// Single-variable quantifier elimination over UTVPI atoms.
///
/// Bounds on x are read off as `x = m ± t`, `x < m ± u`, `x > m ± v`; an
/// equality substitutes, one-sided bound sets witness via their shifted
/// bound terms, and the two-sided case takes one disjunct per lower bound
/// with `succ` of the bound substituted.
pub fn utvpi_qe(var: &str, atoms: &[UtvpiAtom]) -> UtvpiQeResult {
    let x = IdlVar::Const(var.to_string());
    let mut eqs: Vec<UtvpiWitness> = Vec::new();
    let mut uppers: Vec<UtvpiWitness> = Vec::new();
    let mut lowers: Vec<UtvpiWitness> = Vec::new();
    let mut x_atoms: Vec<&UtvpiAtom> = Vec::new();
    let mut rest: Vec<UtvpiAtom> = Vec::new();

    for atom in atoms {
        // The constructors guarantee x occupies at most one slot.
        let (coeff, other_coeff, other_var) = if atom.a != 0 && atom.u == x {
            (atom.a, atom.b, &atom.w)
        } else if atom.b != 0 && atom.w == x {
            (atom.b, atom.a, &atom.u)
        } else {
            rest.push(atom.clone());
            continue;
        };
        x_atoms.push(atom);
        // coeff·x + other ⋈ n  =>  x ⋈' (n - other)/coeff
        let bound = UtvpiWitness {
            m: coeff * atom.n,
            sign: -coeff * other_coeff,
            var: other_var.clone(),
        };
        match (atom.rel, coeff) {
            (URel::Eq, _) => eqs.push(bound),
            (URel::Lt, 1) => uppers.push(bound),
            (URel::Lt, -1) => lowers.push(bound),
            _ => unreachable!(),
        }
    }

    let disjuncts = if let Some(eq) = eqs.first() {
        vec![instantiate(&x_atoms, &x, eq, &rest)]
    } else if x_atoms.is_empty() {
        vec![UtvpiDisjunct {
            witness: UtvpiWitness { m: 0, sign: 0, var: IdlVar::Zero },
            formula: Some(rest),
        }]
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

    UtvpiQeResult { var: var.to_string(), disjuncts }
}
