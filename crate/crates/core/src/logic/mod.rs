//! Relational vocabulary, ground states, substitutions and formula evaluation.

mod formula;
mod search;
mod state;
mod vocab;

pub use formula::{Conjunction, GroundConj, GroundLiteral, Literal, Substitution, Term};
pub use search::{enumerate_covering_substitutions, search_bindings};
pub use state::{holds, State};
pub use vocab::{
    DerivedBody, DerivedDef, FuncId, Function, GroundDerived, ObjectId, PredId, PredKind, Predicate, Signature, Symbol,
    Vocabulary,
};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LogicError {
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(String),
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("`{name}` expects {expected} argument(s), found {found}")]
    Arity { name: String, expected: usize, found: usize },
    #[error("value {value} of `{name}` outside its range {min}..{max}")]
    OutOfRange { name: String, value: i64, min: i64, max: i64 },
    #[error("empty range for function `{0}`")]
    EmptyRange(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("`{name}` is not a {expected}")]
    KindMismatch { name: String, expected: &'static str },
    #[error("cyclic derived definitions through `{0}`")]
    CyclicDerived(String),
    #[error("unsupported definition for derived predicate `{0}`: {1}")]
    UnsupportedDerived(String, String),
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    struct Cubes {
        vocab: Vocabulary,
        on: PredId,
        cube: PredId,
        table: PredId,
        clear: PredId,
    }

    fn cubes() -> Cubes {
        let mut sig = Signature::new();
        let table = sig.add_predicate("table", 1, PredKind::Primitive).unwrap();
        let cube = sig.add_predicate("cube", 1, PredKind::Primitive).unwrap();
        let on = sig.add_predicate("on", 2, PredKind::Primitive).unwrap();
        sig.add_predicate("inhand", 1, PredKind::Primitive).unwrap();
        let clear = sig.add_predicate("clear", 1, PredKind::Derived).unwrap();
        sig.define(
            clear,
            DerivedDef {
                params: vec!["X".into()],
                body: DerivedBody::ForallNot { var: "Y".into(), pred: on, args: vec![Term::var("Y"), Term::var("X")] },
            },
        )
        .unwrap();
        let objects = ["a", "b", "c", "t"].iter().map(|s| s.to_string()).collect();
        let vocab = Vocabulary::new(Arc::new(sig), objects).unwrap();
        Cubes { vocab, on, cube, table, clear }
    }

    fn c(n: &str) -> Term {
        Term::constant(n)
    }

    fn s0(k: &Cubes) -> State {
        let v = &k.vocab;
        let o = |n: &str| v.object_id(n).unwrap();
        let atoms = vec![
            v.atom_index(k.on, &[o("a"), o("b")]).unwrap(),
            v.atom_index(k.on, &[o("b"), o("c")]).unwrap(),
            v.atom_index(k.on, &[o("c"), o("t")]).unwrap(),
            v.atom_index(k.cube, &[o("a")]).unwrap(),
            v.atom_index(k.cube, &[o("b")]).unwrap(),
            v.atom_index(k.cube, &[o("c")]).unwrap(),
            v.atom_index(k.table, &[o("t")]).unwrap(),
        ];
        State::from_true_atoms(v, atoms)
    }

    #[test]
    fn substitution_grounds_formula() {
        let k = cubes();
        let f = Conjunction::from_literals([
            Literal::atom(k.on, vec![Term::var("X"), Term::var("Y")]),
            Literal::atom(k.cube, vec![Term::var("X")]),
        ]);
        let mut sub = Substitution::new();
        sub.insert("X".into(), k.vocab.object_id("a").unwrap());
        sub.insert("Y".into(), k.vocab.object_id("b").unwrap());
        let g = f.apply_substitution(&sub, &k.vocab).unwrap();
        assert!(g.is_ground());
        assert_eq!(g.literals()[0], Literal::atom(k.on, vec![c("a"), c("b")]));
        assert_eq!(g.literals()[1], Literal::atom(k.cube, vec![c("a")]));

        assert!(Conjunction::new().apply_substitution(&sub, &k.vocab).unwrap().is_empty());

        let partial = Conjunction::from_literals([Literal::atom(k.on, vec![Term::var("X"), Term::var("Z")])]);
        assert_eq!(partial.apply_substitution(&sub, &k.vocab), Err(LogicError::UnboundVariable("Z".into())));
    }

    #[test]
    fn holds_on_start_state() {
        let k = cubes();
        let s = s0(&k);
        let f = Conjunction::from_literals([
            Literal::atom(k.on, vec![c("a"), c("b")]),
            Literal::atom(k.on, vec![c("b"), c("c")]),
        ]);
        assert!(holds(&k.vocab, &s, &f).unwrap());
        let clear_b = Conjunction::from_literals([Literal::atom(k.clear, vec![c("b")])]);
        assert!(!holds(&k.vocab, &s, &clear_b).unwrap());
        assert!(holds(&k.vocab, &s, &Conjunction::new()).unwrap());
        let open = Conjunction::from_literals([Literal::atom(k.clear, vec![Term::var("X")])]);
        assert!(matches!(holds(&k.vocab, &s, &open), Err(LogicError::UnboundVariable(_))));
    }

    #[test]
    fn derived_clear_on_start_state() {
        let k = cubes();
        let s = s0(&k);
        let v = &k.vocab;
        let clear = |n: &str| s.atom(v.atom_index(k.clear, &[v.object_id(n).unwrap()]).unwrap());
        assert!(clear("a"));
        assert!(!clear("b"));
        assert!(!clear("c"));
        let empty = State::new(v);
        for o in 0..4 {
            assert!(empty.atom(v.atom_index(k.clear, &[ObjectId(o)]).unwrap()));
        }
        let twice = s.clone().with_derived(v);
        assert_eq!(twice, s);
    }

    #[test]
    fn covering_substitutions_with_fixed_action_variable() {
        let k = cubes();
        let s = s0(&k);
        // context of the clear-grab rule: cube(X), clear(X), on(X,Y)
        let ctx = Conjunction::from_literals([
            Literal::atom(k.cube, vec![Term::var("X")]),
            Literal::atom(k.clear, vec![Term::var("X")]),
            Literal::atom(k.on, vec![Term::var("X"), Term::var("Y")]),
        ]);
        let mut fixed = Substitution::new();
        fixed.insert("X".into(), k.vocab.object_id("a").unwrap());
        let subs = enumerate_covering_substitutions(&k.vocab, &ctx, &s, &fixed).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0]["Y"], k.vocab.object_id("b").unwrap());

        let unsat = Conjunction::from_literals([Literal::atom(k.on, vec![c("a"), c("c")])]);
        assert!(enumerate_covering_substitutions(&k.vocab, &unsat, &s, &Substitution::new()).unwrap().is_empty());

        let sat = Conjunction::from_literals([Literal::atom(k.on, vec![c("a"), c("b")])]);
        let subs = enumerate_covering_substitutions(&k.vocab, &sat, &s, &Substitution::new()).unwrap();
        assert_eq!(subs, vec![Substitution::new()]);
    }

    #[test]
    fn cyclic_derived_definitions_rejected() {
        let mut sig = Signature::new();
        let p = sig.add_predicate("p", 0, PredKind::Derived).unwrap();
        let q = sig.add_predicate("q", 0, PredKind::Derived).unwrap();
        sig.define(p, DerivedDef { params: vec![], body: DerivedBody::And(vec![Literal::atom(q, vec![])]) }).unwrap();
        sig.define(q, DerivedDef { params: vec![], body: DerivedBody::Or(vec![Literal::not(p, vec![])]) }).unwrap();
        assert!(matches!(Vocabulary::new(Arc::new(sig), vec![]), Err(LogicError::CyclicDerived(_))));
    }

    #[test]
    fn duplicate_names_rejected() {
        let mut sig = Signature::new();
        sig.add_predicate("on", 2, PredKind::Primitive).unwrap();
        assert!(sig.add_function("on", 1, 0, 3).is_err());
    }

    #[test]
    fn atom_layout_is_lexicographic_and_invertible() {
        let k = cubes();
        let v = &k.vocab;
        let mut last = None;
        for args in v.tuples(2) {
            let i = v.atom_index(k.on, &args).unwrap();
            if let Some(l) = last {
                assert_eq!(i, l + 1);
            }
            last = Some(i);
            assert_eq!(v.atom_at(i), (k.on, args));
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_state(k: &Cubes, bits: &[bool]) -> State {
            let mut s = State::new(&k.vocab);
            for (i, idx) in k.vocab.primitive_atoms().into_iter().enumerate() {
                s.set_atom(idx, bits[i % bits.len()]);
            }
            s.with_derived(&k.vocab)
        }

        proptest! {
            #[test]
            fn covering_matches_brute_force(bits in proptest::collection::vec(any::<bool>(), 1..40), shape in 0usize..3) {
                let k = cubes();
                let s = random_state(&k, &bits);
                let v = &k.vocab;
                let ctx = match shape {
                    0 => Conjunction::from_literals([
                        Literal::atom(k.on, vec![Term::var("X"), Term::var("Y")]),
                        Literal::not(k.cube, vec![Term::var("Y")]),
                    ]),
                    1 => Conjunction::from_literals([
                        Literal::atom(k.on, vec![Term::var("X"), Term::var("Y")]),
                        Literal::atom(k.on, vec![Term::var("Y"), Term::var("Z")]),
                        Literal::Neq(Term::var("X"), Term::var("Z")),
                    ]),
                    _ => Conjunction::from_literals([
                        Literal::atom(k.clear, vec![Term::var("X")]),
                        Literal::not(k.table, vec![Term::var("X")]),
                    ]),
                };
                let found = enumerate_covering_substitutions(v, &ctx, &s, &Substitution::new()).unwrap();
                let vars = ctx.free_vars();
                let mut brute = Vec::new();
                for tuple in v.tuples(vars.len()) {
                    let sub: Substitution = vars.iter().cloned().zip(tuple).collect();
                    if ctx.ground(v, &sub).unwrap().holds_in(&s) {
                        brute.push(sub);
                    }
                }
                brute.sort();
                let mut sorted = found.clone();
                sorted.sort();
                prop_assert_eq!(sorted, brute);
            }

            #[test]
            fn conjunction_splits(bits in proptest::collection::vec(any::<bool>(), 1..40), i in 0usize..16, j in 0usize..16) {
                let k = cubes();
                let s = random_state(&k, &bits);
                let v = &k.vocab;
                let pick = |n: usize| {
                    let args = v.tuples(2).nth(n).unwrap();
                    Literal::Atom { pred: k.on, args: args.iter().map(|o| Term::constant(v.object_name(*o))).collect(), positive: !n.is_multiple_of(3) }
                };
                let f1 = Conjunction::from_literals([pick(i)]);
                let f2 = Conjunction::from_literals([pick(j)]);
                let both = Conjunction::from_literals([pick(i), pick(j)]);
                prop_assert_eq!(
                    holds(v, &s, &both).unwrap(),
                    holds(v, &s, &f1).unwrap() && holds(v, &s, &f2).unwrap()
                );
            }

            #[test]
            fn eval_derived_idempotent_and_primitive_preserving(bits in proptest::collection::vec(any::<bool>(), 1..40)) {
                let k = cubes();
                let mut raw = State::new(&k.vocab);
                for (i, idx) in (0..k.vocab.n_atoms()).enumerate() {
                    raw.set_atom(idx, bits[i % bits.len()]);
                }
                let once = raw.clone().with_derived(&k.vocab);
                let twice = once.clone().with_derived(&k.vocab);
                prop_assert_eq!(&once, &twice);
                for idx in k.vocab.primitive_atoms() {
                    prop_assert_eq!(once.atom(idx), raw.atom(idx));
                }
            }
        }
    }
}
