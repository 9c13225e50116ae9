use graphon_core::constraints::{
    evaluate_decorated, evaluate_ordinary, parse_constraint, parse_constraint_file,
    parse_expression, DecoratedOptions, Estimator, Expr, GraphTerm, Status,
};
use graphon_core::exact::ratio;
use graphon_core::graphons::{make_cf, make_constant, GraphonDescriptor};
use graphon_core::sampling::SimpleGraph;
use num_rational::BigRational;
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    let konst = (0i64..50, 1i64..20).prop_map(|(p, q)| Expr::Const(ratio(p, q)));
    let graph = (2usize..5, prop::collection::vec(any::<bool>(), 6)).prop_map(|(n, bits)| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let edges = pairs
            .into_iter()
            .zip(bits)
            .filter(|(_, b)| *b)
            .map(|(p, _)| p);
        Expr::Graph(GraphTerm::Plain(SimpleGraph::new(n, edges).unwrap()))
    });
    prop_oneof![konst, graph]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(Expr::Sum),
            prop::collection::vec(inner, 2..4).prop_map(Expr::Product),
        ]
    })
}

/// Exact value with each graph replaced by `order + edges / 7`.
fn value(e: &Expr) -> BigRational {
    let mut leaf = |t: &GraphTerm| match t {
        GraphTerm::Plain(g) => ratio(g.order() as i64 * 7 + g.num_edges() as i64, 7),
        GraphTerm::Decorated(_) => unreachable!(),
    };
    e.eval_with(&mut leaf, &|c: &BigRational| c.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rendering_parses_back_to_the_same_value(e in expr()) {
        let text = e.to_string();
        let back = parse_expression(&text).unwrap();
        prop_assert_eq!(value(&back), value(&e));
        // a second round trip is the identity
        prop_assert_eq!(parse_expression(&back.to_string()).unwrap(), back);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sums_evaluate_additively_on_shared_samples(a in 0usize..4, b in 0usize..4, seed in 0u64..1000) {
        let names = ["K3", "C4", "P4", "E3"];
        let g = make_cf(10).unwrap();
        let eval = |text: &str| {
            evaluate_ordinary(&parse_constraint(text).unwrap(), &g, 8192, seed).unwrap().lhs.value
        };
        let both = eval(&format!("{} + {} = 0", names[a], names[b]));
        prop_assert_eq!(both, eval(&format!("{} = 0", names[a])) + eval(&format!("{} = 0", names[b])));
        let scaled = eval(&format!("2 * {} = 0", names[a]));
        prop_assert_eq!(scaled, 2.0 * eval(&format!("{} = 0", names[a])));
    }
}

const TWO_HALVES: &str = r#"{"kind": "step", "parameters": {"step":
    {"breakpoints": ["0", "1/2", "1"], "values": [["1", "1/2"], ["1/2", "0"]]}}}"#;

#[test]
fn verdicts_are_deterministic() {
    let g = TWO_HALVES
        .parse::<GraphonDescriptor>()
        .unwrap()
        .build()
        .unwrap();
    let file = parse_constraint_file(
        "part A 0 1/2\npart B 1/2 1\nD{roots: [A]1; free: (A)2 (B)3; 1-2 1-3 2~3} = 1/4\n",
    )
    .unwrap();
    let parts = file.parts.unwrap();
    let opts = DecoratedOptions {
        root_tuples: 100,
        inner_samples: 100,
        estimator: Estimator::Bernoulli,
        seed: 17,
        ..Default::default()
    };
    let a = evaluate_decorated(&file.constraints[0], &g, &parts, &opts).unwrap();
    let b = evaluate_decorated(&file.constraints[0], &g, &parts, &opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.status, Status::Satisfied);
    let other = DecoratedOptions { seed: 18, ..opts };
    assert_ne!(
        evaluate_decorated(&file.constraints[0], &g, &parts, &other).unwrap(),
        a
    );
}

#[test]
fn ordinary_verdicts_on_constant_graphons() {
    let g = make_constant(ratio(1, 2)).unwrap();
    let check = |t: &str| {
        evaluate_ordinary(&parse_constraint(t).unwrap(), &g, 1000, 0)
            .unwrap()
            .status
    };
    assert_eq!(check("K2 = 0.5"), Status::Satisfied);
    assert_eq!(check("K2 = 0.6"), Status::Violated);
    // every labelled graph on three vertices has probability 1/8
    assert_eq!(check("K3 + P3 + G{3;0-1} + E3 = 1"), Status::Satisfied);
}
