use proptest::prelude::*;

use lrsx_core::calculus::Calculus;
use lrsx_core::diagram::{parse_diagram, Arrow, Diagram};
use lrsx_core::ground::{alpha_let_equiv, canonical, enumerate_ground, is_answer, sr_steps};
use lrsx_core::parse::parse;
use lrsx_core::syntax::Expr;
use lrsx_core::trs::{emit_tpdb, parse_tpdb, Term, Trs, TrsRule};

fn mini() -> Calculus {
    parse(include_str!("../fixtures/mini_letrec.inp")).unwrap()
}

fn pool() -> &'static (Calculus, Vec<Expr>) {
    static POOL: std::sync::OnceLock<(Calculus, Vec<Expr>)> = std::sync::OnceLock::new();
    POOL.get_or_init(|| {
        let c = mini();
        let es = enumerate_ground(&c, 5);
        (c, es)
    })
}

fn term(vars: bool) -> impl Strategy<Value = Term> {
    let leaf = if vars {
        prop_oneof![
            prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var),
            Just(Term::constant("c")),
        ]
        .boxed()
    } else {
        Just(Term::constant("c")).boxed()
    };
    leaf.prop_recursive(4, 24, 3, |inner| {
        (prop::sample::select(vec!["f", "g", "h"]), prop::collection::vec(inner, 1..=3))
            .prop_map(|(f, args)| Term::app(f, args))
    })
}

fn rule() -> impl Strategy<Value = TrsRule> {
    (prop::sample::select(vec!["f", "g"]), prop::collection::vec(term(true), 1..=2), term(true)).prop_map(
        |(f, args, rhs)| {
            let lhs = Term::app(f, args);
            let bound = lhs.var_set();
            // right-hand variables must occur on the left
            let unbound = rhs.var_set().into_iter().filter(|x| !bound.contains(x));
            let rhs = rhs.subst(&unbound.map(|x| (x, Term::constant("c"))).collect());
            TrsRule { lhs, rhs }
        },
    )
}

fn arrow() -> impl Strategy<Value = Arrow> {
    let label = prop::sample::select(vec!["SR,a", "SR,b", "T", "SR,lll,+"]);
    (any::<bool>(), label).prop_map(|(fwd, l)| if fwd { Arrow::Fwd(l.into()) } else { Arrow::Back(l.into()) })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tpdb_round_trip(rules in prop::collection::vec(rule(), 0..6)) {
        let t = Trs { rules };
        let back = parse_tpdb(&emit_tpdb(&t)).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn diagram_round_trip(rhs in prop::collection::vec(arrow(), 0..5)) {
        let d = Diagram { lhs: vec![Arrow::Back("SR,a".into()), Arrow::Fwd("T".into())], rhs };
        let back = parse_diagram(&d.to_string(), 1).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn canonical_is_idempotent(i in any::<prop::sample::Index>()) {
        let (_, es) = pool();
        let e = i.get(es);
        let c = canonical(e);
        prop_assert_eq!(&canonical(&c), &c);
        prop_assert!(alpha_let_equiv(e, &c));
    }

    #[test]
    fn enumerated_expressions_are_canonical_and_distinct(i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let (_, es) = pool();
        let (a, b) = (i.get(es), j.get(es));
        prop_assert_eq!(&canonical(a), a);
        prop_assert_eq!(a == b, alpha_let_equiv(a, b));
    }

    #[test]
    fn answers_do_not_reduce(i in any::<prop::sample::Index>()) {
        let (c, es) = pool();
        let e = i.get(es);
        if is_answer(c, e) {
            prop_assert!(sr_steps(c, e).is_empty());
        }
    }

    #[test]
    fn garbage_collection_shrinks(i in any::<prop::sample::Index>()) {
        let (c, es) = pool();
        let e = i.get(es);
        for r in &c.transformations {
            for st in lrsx_core::ground::ground_apply(c, r, e) {
                prop_assert!(st.target.size() < e.size(), "{} -> {}", e, st.target);
            }
        }
    }
}
