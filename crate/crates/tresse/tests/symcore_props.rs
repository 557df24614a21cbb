//! Randomized invariants of the symbolic kernel: idempotence and value
//! preservation of normalization, exactness of differentiation rules, and
//! display/parse round trips.

use proptest::prelude::*;
use tresse::symcore::{
    diff, eval_num, int, normalize, parse_expr, var, C64, Expr, Symbol, VarAssignment,
};

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-6i64..7).prop_map(int),
        Just(var("x")),
        Just(var("y")),
        Just(var("p")),
    ];
    leaf.prop_recursive(3, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / b),
            (inner.clone(), 1i64..4).prop_map(|(a, n)| Expr::powi(a, n)),
            inner.clone().prop_map(Expr::sqrt),
            inner.clone().prop_map(Expr::exp),
        ]
    })
}

fn assignment(x: f64, y: f64, p: f64) -> VarAssignment {
    let mut a = VarAssignment::new();
    a.set("x", x).set("y", y).set("p", p);
    a
}

fn close(a: C64, b: C64, scale: f64) -> bool {
    (a - b).norm() <= 1e-6 * (1.0 + scale)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(e in arb_expr()) {
        let Ok(n1) = normalize(&e) else { return Ok(()) };
        let n2 = normalize(&n1).unwrap();
        prop_assert_eq!(n1, n2);
    }

    #[test]
    fn normalize_preserves_values(e in arb_expr(), x in 0.4f64..1.6, y in 0.4f64..1.6, p in 0.4f64..1.6) {
        let Ok(n) = normalize(&e) else { return Ok(()) };
        let a = assignment(x, y, p);
        let (Ok(v0), Ok(v1)) = (eval_num(&e, &a), eval_num(&n, &a)) else { return Ok(()) };
        let scale = v0.scale.max(v1.scale);
        prop_assume!(scale < 1e9);
        prop_assert!(
            close(v0.value, v1.value, scale),
            "raw {} vs normalized {}", v0.value, v1.value
        );
    }

    #[test]
    fn normalization_is_a_congruence(a in arb_expr(), b in arb_expr()) {
        let (Ok(na), Ok(nb)) = (normalize(&a), normalize(&b)) else { return Ok(()) };
        let direct = normalize(&(a.clone() + b.clone()));
        let staged = normalize(&(na + nb));
        let (Ok(direct), Ok(staged)) = (direct, staged) else { return Ok(()) };
        prop_assert_eq!(direct, staged);
    }

    #[test]
    fn product_rule_is_exact(a in arb_expr(), b in arb_expr()) {
        let x = Symbol::intern("x");
        let Ok(lhs) = diff(&(a.clone() * b.clone()), x) else { return Ok(()) };
        let (Ok(da), Ok(db)) = (diff(&a, x), diff(&b, x)) else { return Ok(()) };
        let rhs = normalize(&(da * b + a * db)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn display_parses_back(e in arb_expr()) {
        let Ok(n) = normalize(&e) else { return Ok(()) };
        let printed = format!("{n}");
        let reparsed = parse_expr(&printed).unwrap();
        let renorm = normalize(&reparsed).unwrap();
        prop_assert_eq!(n, renorm, "printed form: {}", printed);
    }
}

#[test]
fn jet_power_print_parse() {
    // powers of bare u must not re-lex as jet coordinates
    let u = var("u");
    let e = normalize(&(u.clone() * u)).unwrap();
    let printed = format!("{e}");
    let back = normalize(&parse_expr(&printed).unwrap()).unwrap();
    assert_eq!(e, back);
}
