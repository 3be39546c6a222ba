use super::*;
use proptest::prelude::*;

fn parse1(src: &str) -> Expression {
    parse_candidate(src, 1).unwrap()
}

#[test]
fn constant_population_seed_parses() {
    let e = parse1("lambda x,*params: params[0]");
    assert_eq!(e.root(), &Node::Parameter(0));
    assert_eq!(e.param_count(), 1);
    assert_eq!(e.complexity(), 1);
}

#[test]
fn one_shot_listing_parses_to_two_param_ast() {
    let e = parse1("np.sin(params[0]*x)*np.exp(-params[1]*x**2)");
    assert_eq!(e.param_count(), 2);
    match e.root() {
        Node::Binary(BinaryOp::Mul, a, b) => {
            assert!(matches!(**a, Node::Call(Func::Sin, _)));
            assert!(matches!(**b, Node::Call(Func::Exp, _)));
        }
        other => panic!("unexpected root {other:?}"),
    }
}

#[test]
fn malformed_input_is_rejected() {
    assert!(matches!(
        parse_candidate("lambda x: np.foo(x", 1),
        Err(ParseError::Syntax { .. }) | Err(ParseError::UnknownFunction(_))
    ));
    assert!(matches!(
        parse_candidate("np.foo(x)", 1),
        Err(ParseError::UnknownFunction(_))
    ));
    assert!(parse_candidate("", 1).is_err());
    assert!(parse_candidate("x if x > 0 else 0", 1).is_err());
}

#[test]
fn bare_params_without_index_is_an_error() {
    assert!(matches!(
        parse_candidate("lambda x,*params: params * x", 1),
        Err(ParseError::Syntax { .. })
    ));
}

#[test]
fn arity_is_checked() {
    assert!(matches!(
        parse_candidate("np.sin(x, 2)", 1),
        Err(ParseError::Arity { .. })
    ));
    assert!(matches!(
        parse_candidate("np.power(x)", 1),
        Err(ParseError::Arity { .. })
    ));
}

#[test]
fn variable_range_is_checked() {
    assert!(matches!(
        parse_candidate("y + 1", 1),
        Err(ParseError::VariableOutOfRange { .. })
    ));
    assert!(parse_candidate("x2*y", 3).is_ok());
    assert!(matches!(
        parse_candidate("x3", 3),
        Err(ParseError::VariableOutOfRange { .. })
    ));
}

#[test]
fn code_fence_and_assignment_stripping() {
    let fenced = "```python\ncurve_2 = lambda x,*params: params[0]*x\n```";
    let e = parse_candidate(fenced, 1).unwrap();
    assert_eq!(e.canonical(), "params[0]*x");

    let assigned = "curve_2 = np.cos(x)";
    assert_eq!(parse_candidate(assigned, 1).unwrap().canonical(), "cos(x)");
}

#[test]
fn lambda_body_may_continue_on_next_line() {
    let src = "curve = lambda x, params:\nnp.sin(params[0]*x)*np.exp(-params[1]*x**2)";
    let e = parse_candidate(src, 1).unwrap();
    assert_eq!(e.param_count(), 2);
}

#[test]
fn named_lambda_arguments_become_parameters() {
    let e = parse_candidate("lambda x, a, b: a*x + b", 1).unwrap();
    assert_eq!(e.param_count(), 2);
    assert_eq!(e.canonical(), "params[0]*x + params[1]");
}

#[test]
fn sparse_parameter_indices_are_reindexed_densely() {
    let e = parse1("params[3]*x + params[7]");
    assert_eq!(e.param_count(), 2);
    assert_eq!(e.canonical(), "params[0]*x + params[1]");
}

#[test]
fn scipy_special_tokens_resolve() {
    let e = parse1("scipy.special.jn(0, x)");
    assert!(matches!(e.root(), Node::Call(Func::BesselJ, _)));
    assert_eq!(e.canonical(), "besselj(0, x)");
    assert!(parse1("scipy.special.erf(x)").canonical() == "erf(x)");
}

#[test]
fn constants_pi_and_e() {
    let e = parse1("np.pi*x + pi");
    let r = evaluate(&e, &[vec![1.0]], &[]).unwrap();
    assert_eq!(r.values[0], 2.0 * std::f64::consts::PI);
    let e2 = parse1("e**x");
    let r2 = evaluate(&e2, &[vec![2.0]], &[]).unwrap();
    assert!((r2.values[0] - std::f64::consts::E.powi(2)).abs() < 1e-12);
}

#[test]
fn evaluate_constant_parameter() {
    let e = parse1("lambda x,*params: params[0]");
    let r = evaluate(&e, &[vec![0.0, 1.0]], &[3.0]).unwrap();
    assert_eq!(r.values, vec![3.0, 3.0]);
    assert!(r.all_finite());
}

#[test]
fn evaluate_odd_function_at_origin() {
    let e = parse1("np.sin(2*x)*np.exp(-10*x**2)");
    let r = evaluate(&e, &[vec![0.0]], &[]).unwrap();
    assert_eq!(r.values[0], 0.0);
}

#[test]
fn evaluate_domain_error_is_masked_not_fatal() {
    let e = parse1("np.log(x)");
    let r = evaluate(&e, &[vec![-1.0, 1.0]], &[]).unwrap();
    assert!(!r.finite_mask[0]);
    assert!(r.finite_mask[1]);
    assert!(r.values[0].is_nan());
}

#[test]
fn evaluate_division_by_zero_masked() {
    let e = parse1("1/x");
    let r = evaluate(&e, &[vec![0.0, 2.0]], &[]).unwrap();
    assert!(!r.finite_mask[0]);
    assert_eq!(r.values[1], 0.5);
}

#[test]
fn evaluate_dimension_mismatch() {
    let e = parse1("params[0]*x");
    assert!(matches!(
        evaluate(&e, &[vec![1.0]], &[]),
        Err(ExprError::DimensionMismatch(_))
    ));
    assert!(matches!(
        evaluate(&e, &[vec![1.0], vec![2.0]], &[1.0]),
        Err(ExprError::DimensionMismatch(_))
    ));
}

#[test]
fn python_modulo_semantics() {
    let e = parse1("-1 % 3");
    let r = evaluate(&e, &[vec![0.0]], &[]).unwrap();
    // lexer folds -1 into a literal; python gives 2
    assert_eq!(r.values[0], 2.0);
}

#[test]
fn complexity_counts_nodes() {
    assert_eq!(parse1("params[0]").complexity(), 1);
    assert_eq!(parse1("params[0]*x + params[1]").complexity(), 5);
    let e = parse1("np.sin(params[0]*x)*np.exp(-params[1]*x**2)");
    let canon = parse_body(&e.canonical(), 1).unwrap();
    assert_eq!(e.complexity(), canon.complexity());
}

#[test]
fn canonical_round_trip_examples() {
    for src in [
        "params[0]",
        "params[0]*x + params[1]",
        "np.sin(params[0]*x)*np.exp(-params[1]*x**2)",
        "x**3",
        "(np.sqrt(x)+1.44439)*(np.log(x)+np.pi)",
        "np.cos(np.exp(x))+4.67315",
        "2*np.exp(-3*x)+np.exp(-x)",
        "(x+4.11509)/x**3",
        "-x**2",
        "x % 2",
    ] {
        let Ok(e) = parse_candidate(src, 1) else { continue };
        let canon = e.canonical();
        let e2 = parse_body(&canon, 1).unwrap();
        assert_eq!(e, e2, "round trip failed for `{src}` -> `{canon}`");
        assert_eq!(e2.canonical(), canon);
    }
}

#[test]
fn evaluate_is_pure() {
    let e = parse1("np.sin(params[0]*x)*np.exp(-params[1]*x**2)");
    let xs: Vec<f64> = (0..100).map(|i| -1.2 + 2.4 * i as f64 / 99.0).collect();
    let a = evaluate(&e, &[xs.clone()], &[2.0, 10.0]).unwrap();
    let b = evaluate(&e, &[xs], &[2.0, 10.0]).unwrap();
    assert_eq!(a, b);
}

// --- property tests ---------------------------------------------------------

fn arb_node(dim: usize) -> impl Strategy<Value = Node> {
    let leaf = prop_oneof![
        (0.0f64..100.0).prop_map(Node::Constant),
        (0..dim).prop_map(Node::Variable),
        (0usize..4).prop_map(Node::Parameter),
    ];
    leaf.prop_recursive(5, 64, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Node::Unary(UnaryOp::Neg, Box::new(a))),
            (
                prop_oneof![
                    Just(BinaryOp::Add),
                    Just(BinaryOp::Sub),
                    Just(BinaryOp::Mul),
                    Just(BinaryOp::Div),
                    Just(BinaryOp::Pow),
                    Just(BinaryOp::Mod)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Node::Binary(op, Box::new(a), Box::new(b))),
            (
                prop_oneof![
                    Just(Func::Sin),
                    Just(Func::Exp),
                    Just(Func::Sqrt),
                    Just(Func::Tanh),
                    Just(Func::Abs)
                ],
                inner.clone()
            )
                .prop_map(|(f, a)| Node::Call(f, vec![a])),
            (inner.clone(), inner).prop_map(|(a, b)| Node::Call(Func::Maximum, vec![a, b])),
        ]
    })
}

proptest! {
    // Canonical text reparses to the identical AST.
    #[test]
    fn canonical_parse_identity(node in arb_node(2)) {
        let expr = Expression::new(node, 2).unwrap();
        let canon = expr.canonical();
        match parse_body(&canon, 2) {
            Ok(reparsed) => {
                prop_assert_eq!(&reparsed, &expr, "reparse mismatch for `{}`", canon);
                prop_assert_eq!(reparsed.canonical(), canon);
            }
            Err(err) => prop_assert!(false, "canonical text failed to parse: `{}`: {}", canon, err),
        }
    }

    // Dense indexing: after parse, parameters are exactly 0..p-1.
    #[test]
    fn dense_parameter_indexing(node in arb_node(1)) {
        let expr = Expression::new(node, 1).unwrap();
        let mut max_var = None;
        let mut params = Vec::new();
        expr.root().max_indices(&mut max_var, &mut params);
        params.sort_unstable();
        let expected: Vec<usize> = (0..expr.param_count()).collect();
        prop_assert_eq!(params, expected);
    }

    // Every unmasked output is finite.
    #[test]
    fn finite_mask_soundness(node in arb_node(1), xs in prop::collection::vec(-10.0f64..10.0, 1..20)) {
        let expr = Expression::new(node, 1).unwrap();
        let params: Vec<f64> = (0..expr.param_count()).map(|i| 0.5 + i as f64).collect();
        let r = evaluate(&expr, &[xs], &params).unwrap();
        for (v, m) in r.values.iter().zip(&r.finite_mask) {
            if *m {
                prop_assert!(v.is_finite());
            }
        }
    }
}
