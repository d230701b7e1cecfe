//! Property tests for the structural invariants: canonical offsets,
//! commuting substitutions, coloring monotonicity, printing round-trips,
//! and equivalence-preserving simplification.

mod common;

use std::collections::BTreeMap;

use common::Model;
use craig::proof::simplify;
use craig::{
    classify_symbols, parse_formula, Atom, Color, Formula, FormulaSet, Literal, Locality,
    Signature, SymbolKind, Term, TheoryId,
};

use proptest::prelude::*;

fn const_name() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["a", "b", "c", "d", "x", "y"])
        .prop_map(str::to_string)
}

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        const_name().prop_map(Term::constant),
        Just(Term::Zero),
    ];
    leaf.prop_recursive(3, 16, 2, |inner| {
        prop_oneof![
            (inner.clone(), -4i64..=4).prop_map(|(t, n)| Term::offset(t, n)),
            inner.clone().prop_map(|t| Term::app("f", vec![t])),
            (inner.clone(), inner).prop_map(|(l, r)| Term::app("g", vec![l, r])),
        ]
    })
}

fn atom_strategy() -> impl Strategy<Value = Atom> {
    prop_oneof![
        (term_strategy(), term_strategy()).prop_map(|(l, r)| Atom::Eq(l, r)),
        (term_strategy(), term_strategy()).prop_map(|(l, r)| Atom::Lt(l, r)),
        term_strategy().prop_map(|t| Atom::Pred("P".into(), vec![t])),
        Just(Atom::True),
        Just(Atom::False),
    ]
}

fn formula_strategy() -> impl Strategy<Value = Formula> {
    // Built through the smart constructors, like every library code path:
    // negation folds into literals and singleton and/or unwrap.
    let lit = (atom_strategy(), any::<bool>())
        .prop_map(|(atom, positive)| Formula::Lit(Literal { positive, atom }));
    lit.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::and),
            prop::collection::vec(inner.clone(), 1..3).prop_map(Formula::or),
            inner.clone().prop_map(Formula::not),
        ]
    })
}

fn model_for(f: &Formula) -> BoxedStrategy<Model> {
    let mut consts = std::collections::BTreeSet::new();
    f.collect_constants(&mut consts);
    let consts: Vec<String> = consts.into_iter().collect();
    let n = consts.len();
    (
        prop::collection::vec(-6i64..=6, n),
        prop::collection::vec(-6i64..=6, 64),
        prop::collection::vec(any::<bool>(), 64),
    )
        .prop_map(move |(cv, av, pv)| {
            // Function and predicate interpretations are filled on demand
            // from the pools, keyed by a hash of the arguments.
            DeterministicModel {
                consts: consts.iter().cloned().zip(cv).collect(),
                app_pool: av,
                pred_pool: pv,
            }
            .into_model()
        })
        .boxed()
}

struct DeterministicModel {
    consts: BTreeMap<String, i64>,
    app_pool: Vec<i64>,
    pred_pool: Vec<bool>,
}

impl DeterministicModel {
    fn into_model(self) -> Model {
        Model { consts: self.consts, apps: BTreeMap::new(), preds: BTreeMap::new() }
            .with_pools(self.app_pool, self.pred_pool)
    }
}

trait WithPools {
    fn with_pools(self, apps: Vec<i64>, preds: Vec<bool>) -> Model;
}

impl WithPools for Model {
    fn with_pools(mut self, apps: Vec<i64>, preds: Vec<bool>) -> Model {
        self.apps = BTreeMap::new();
        self.preds = BTreeMap::new();
        // Pre-populate small tables so evaluation is total for the terms
        // the strategies can build (f unary, g binary over pool values).
        let vals: Vec<i64> = (-30..=30).collect();
        let mut k = 0usize;
        for &v in &vals {
            self.apps.insert(("f".into(), vec![v]), apps[k % apps.len()]);
            k += 1;
        }
        for &v in &vals {
            for &w in &vals {
                self.apps.insert(("g".into(), vec![v, w]), apps[k % apps.len()]);
                k += 1;
            }
        }
        for (k, &v) in vals.iter().enumerate() {
            self.preds.insert(("P".into(), vec![v]), preds[k % preds.len()]);
        }
        self
    }
}

proptest! {
    #[test]
    fn offsets_stay_canonical(t in term_strategy(), shifts in prop::collection::vec(-3i64..=3, 0..4)) {
        let mut out = t;
        for s in shifts {
            out = Term::offset(out, s);
        }
        for sub in out.subterms() {
            if let Term::Offset(inner, n) = sub {
                prop_assert_ne!(*n, 0);
                prop_assert!(!matches!(inner.as_ref(), Term::Offset(..)));
            }
        }
    }

    #[test]
    fn disjoint_substitutions_commute(f in formula_strategy()) {
        // a -> f(x) and b -> succ(y): disjoint domains, disjoint images.
        let mut s1 = BTreeMap::new();
        s1.insert(Term::constant("a"), Term::app("f", vec![Term::constant("x")]));
        let mut s2 = BTreeMap::new();
        s2.insert(Term::constant("b"), Term::succ(Term::constant("y")));
        let one = f.substitute(&s1).substitute(&s2);
        let two = f.substitute(&s2).substitute(&s1);
        prop_assert_eq!(one, two);
    }

    #[test]
    fn coloring_moves_monotonically_toward_common(
        fa in prop::collection::vec(formula_strategy(), 1..3),
        fb in prop::collection::vec(formula_strategy(), 1..3),
        extra in formula_strategy(),
    ) {
        let sig = Signature::new();
        let a: FormulaSet = fa.into_iter().collect();
        let b: FormulaSet = fb.into_iter().collect();
        let before = classify_symbols(&a, &b, &sig);
        let mut b2 = b.clone();
        b2.insert(extra);
        let after = classify_symbols(&a, &b2, &sig);
        let mut consts = std::collections::BTreeSet::new();
        for f in a.iter().chain(b.iter()) {
            f.collect_constants(&mut consts);
        }
        for c in consts {
            let was = before.color_of(&c).unwrap();
            let is = after.color_of(&c).unwrap();
            // Never away from common; strict can only flip by gaining an
            // occurrence on the other side.
            if was == Color::AbCommon {
                prop_assert_eq!(is, Color::AbCommon);
            }
            if was == Color::BStrict {
                prop_assert_eq!(is, Color::BStrict);
            }
        }
    }

    #[test]
    fn common_locality_means_no_strict_constant(
        fa in prop::collection::vec(formula_strategy(), 1..3),
        fb in prop::collection::vec(formula_strategy(), 1..3),
    ) {
        let sig = Signature::new();
        let a: FormulaSet = fa.into_iter().collect();
        let b: FormulaSet = fb.into_iter().collect();
        let coloring = classify_symbols(&a, &b, &sig);
        for f in a.iter() {
            if coloring.formula_locality(f).unwrap() == Locality::AbCommon {
                for c in f.constants() {
                    prop_assert_eq!(coloring.color_of(&c).unwrap(), Color::AbCommon);
                }
            }
        }
    }

    #[test]
    fn printing_round_trips(f in formula_strategy()) {
        let mut sig = Signature::new();
        sig.enable_idl();
        for c in ["a", "b", "c", "d", "x", "y"] {
            sig.declare(c, SymbolKind::Const).unwrap();
        }
        sig.declare("f", SymbolKind::Func { theory: TheoryId::Euf, arity: 1 }).unwrap();
        sig.declare("g", SymbolKind::Func { theory: TheoryId::Euf, arity: 2 }).unwrap();
        sig.declare("P", SymbolKind::Pred { theory: TheoryId::Euf, arity: 1 }).unwrap();
        let printed = f.to_string();
        let reparsed = parse_formula(&printed, &sig).unwrap();
        prop_assert_eq!(reparsed, f);
    }

    #[test]
    fn simplify_preserves_truth(f in formula_strategy().prop_flat_map(|f| {
        model_for(&f).prop_map(move |m| (f.clone(), m))
    })) {
        let (f, model) = f;
        let simplified = simplify(&f);
        let before = model.eval_formula(&f);
        let after = model.eval_formula(&simplified);
        // Both evaluate (the model's tables cover the term pool); equal
        // verdicts required.
        prop_assert!(before.is_some(), "model incomplete for {}", f);
        prop_assert_eq!(before, after, "simplification changed {} => {}", f, simplified);
    }

    #[test]
    fn purity_predicates_match_structure(t in term_strategy()) {
        let no_idl = t.subterms().iter().all(|s| !matches!(s, Term::Zero | Term::Offset(..)));
        let no_apps = t.subterms().iter().all(|s| !matches!(s, Term::App(..)));
        prop_assert_eq!(t.is_euf_pure(), no_idl);
        prop_assert_eq!(t.is_idl_pure(), no_apps);
    }
}
