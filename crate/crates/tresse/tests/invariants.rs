//! Integration tests for the invariant tower: the defining transformation law
//! against prolonged point fields, weight bookkeeping, the derivation algebra,
//! and the normalized (absolute) invariants.

use num::BigRational;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tresse::invariants::{
    abs_invariant, check_syzygies, delta, rel_invariant, DeltaDir, InvOperator, Weight,
    ABS_NAMES, REL_NAMES,
};
use tresse::jetspace::{
    cocycles, relative_invariance_rat, restrict, sample_point_field_deg, weight_flow, Ode,
    PointField, ProlongedField,
};
use tresse::symcore::{normalize, parse_expr, to_ratfunc, RatFunc, ZeroConfig, ZeroVerdict};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn rf(src: &str) -> RatFunc {
    to_ratfunc(&parse_expr(src).expect("parse")).expect("ratfunc")
}

fn assert_rf_eq(lhs: &RatFunc, rhs: &RatFunc, what: &str) {
    let diff = lhs.sub(rhs).expect("sub");
    assert!(
        diff.is_zero(),
        "{what}: difference is {}",
        diff.to_expr()
    );
}

#[test]
fn registry_weights_and_orders_match_the_generator_table() {
    let expected: &[(&str, (i64, i64), u32)] = &[
        ("I", (-2, 3), 4),
        ("H", (2, 1), 4),
        ("K", (1, 2), 5),
        ("H10", (3, 1), 5),
        ("H01", (2, 2), 5),
        ("H20", (4, 1), 6),
        ("H11", (3, 2), 6),
        ("H02", (2, 3), 6),
        ("K10", (2, 2), 6),
        ("K01", (1, 3), 6),
        ("Om4_20", (0, 3), 6),
        ("Om4_11", (-1, 4), 6),
        ("Om4_02", (-2, 5), 6),
        ("Om5_10", (-2, 4), 6),
        ("Om5_01", (-3, 5), 6),
        ("Om6", (-4, 5), 6),
    ];
    assert_eq!(expected.len(), REL_NAMES.len());
    for (name, (r, s), order) in expected {
        let f = rel_invariant(name).expect(name);
        assert_eq!(f.weight, Weight::new(*r, *s), "weight of {name}");
        assert_eq!(f.order, *order, "order of {name}");
    }

    let expected_abs: &[(&str, (i64, i64), u32)] = &[
        ("J1", (1, 0), 4),
        ("J2", (0, 1), 4),
        ("Jt1", (1, 0), 5),
        ("Jt2", (0, 1), 5),
        ("Hb10", (0, 0), 5),
        ("Hb01", (0, 0), 5),
        ("Kb", (0, 0), 5),
        ("Hb20", (0, 0), 6),
        ("Hb11", (0, 0), 6),
        ("Hb02", (0, 0), 6),
        ("Kb10", (0, 0), 6),
        ("Kb01", (0, 0), 6),
        ("Ob4_20", (0, 0), 6),
        ("Ob4_11", (0, 0), 6),
        ("Ob4_02", (0, 0), 6),
        ("Ob5_10", (0, 0), 6),
        ("Ob5_01", (0, 0), 6),
        ("Ob6", (0, 0), 6),
    ];
    assert_eq!(expected_abs.len(), ABS_NAMES.len());
    for (name, (r, s), order) in expected_abs {
        let f = abs_invariant(name).expect(name);
        assert_eq!(f.weight, Weight::new(*r, *s), "weight of {name}");
        assert_eq!(f.order, *order, "order of {name}");
    }
}

#[test]
fn every_named_relative_invariant_satisfies_the_defining_transformation_law() {
    let cfg = ZeroConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1e55e);
    for name in REL_NAMES {
        let f = rel_invariant(name).expect(name);
        let degs: &[u32] = if f.order <= 5 { &[3, 3, 2, 2, 1] } else { &[2, 2, 1, 1, 1] };
        let e = f.expr();
        for (i, deg) in degs.iter().enumerate() {
            let xi = sample_point_field_deg(&mut rng, *deg);
            let verdict = relative_invariance_rat(&e, &f.weight.r, &f.weight.s, &xi, &cfg)
                .expect("invariance check");
            assert_eq!(
                verdict,
                ZeroVerdict::ProvedZero,
                "{name} failed the defining law on draw {i} (degree {deg})"
            );
        }
    }
}

#[test]
fn delta_annihilates_the_base_invariant_and_maps_h_to_k() {
    let i = rel_invariant("I").unwrap();
    for dir in [DeltaDir::P, DeltaDir::X, DeltaDir::Y] {
        let d = delta(dir, &i).unwrap();
        assert!(d.expr().is_zero_literal(), "delta {dir:?} of I");
    }
    let h = rel_invariant("H").unwrap();
    let k = delta(DeltaDir::P, &h).unwrap();
    assert_eq!(k.weight, Weight::new(1, 2));
    assert_rf_eq(
        &to_ratfunc(&k.expr()).unwrap(),
        &to_ratfunc(&rel_invariant("K").unwrap().expr()).unwrap(),
        "Dp H vs K",
    );
}

#[test]
fn weight_arithmetic_follows_products_and_powers() {
    let i = rel_invariant("I").unwrap();
    let h = rel_invariant("H").unwrap();
    let prod = i.mul(&h).unwrap();
    assert_eq!(prod.weight, Weight::new(0, 4));
    let root = i.pow(&rat(1, 2)).unwrap();
    assert_eq!(root.weight, Weight { r: rat(-1, 1), s: rat(3, 2) });
    let back = root.pow(&rat(2, 1)).unwrap();
    assert_eq!(back.weight, i.weight);
    assert_rf_eq(
        &to_ratfunc(&back.expr()).unwrap(),
        &to_ratfunc(&i.expr()).unwrap(),
        "(I^(1/2))^2 vs I",
    );
}

#[test]
fn delta_y_matches_its_expanded_frame_form() {
    let dy = InvOperator::delta_y().unwrap();
    assert_rf_eq(&dy.cx, &rf("u^5/(5*u^4)"), "cx of delta_y");
    assert_rf_eq(&dy.cy, &RatFunc::one(), "cy of delta_y");
    assert_rf_eq(
        &dy.cp,
        &rf("2*u^1 + (5*u^4_{10} + 6*u*u^5)/(5*u^4)"),
        "cp of delta_y",
    );
    assert_rf_eq(
        &dy.zr,
        &rf("-3/8*u^2 - u^4_{01}/(4*u^4) + u^1*u^5/(10*u^4) + 3*(u*u^5 + u^4_{10})*u^5/(20*u^4*u^4)"),
        "zr of delta_y",
    );
    assert_rf_eq(
        &dy.zs,
        &rf("-1/4*u^2 - u^4_{01}/(2*u^4) - 3*u^1*u^5/(5*u^4) - 3*(u*u^5 + u^4_{10})*u^5/(10*u^4*u^4)"),
        "zs of delta_y",
    );
    assert!(dy.z0.is_zero(), "z0 of delta_y");
}

#[test]
fn the_om4_02_correction_term_must_be_the_squared_invariant() {
    let cfg = ZeroConfig::default();
    let w = Weight::new(-2, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(0xdead);
    let xi = sample_point_field_deg(&mut rng, 2);

    let squared = tresse::invariants::rel_invariant("Om4_02").unwrap();
    let verdict = relative_invariance_rat(&squared.expr(), &w.r, &w.s, &xi, &cfg).unwrap();
    assert_eq!(verdict, ZeroVerdict::ProvedZero, "squared variant is invariant");

    // The mixed-product variant is a sum of two different weights, so the
    // transformation law at (-2, 5) must fail.
    let mixed = tresse::invariants::om4_02_variant(false).unwrap();
    let verdict = relative_invariance_rat(&mixed.to_expr(), &w.r, &w.s, &xi, &cfg).unwrap();
    assert_ne!(verdict, ZeroVerdict::ProvedZero, "mixed variant must fail");
}

#[test]
fn normalized_invariants_are_annihilated_by_prolonged_point_fields() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut fields = vec![
        PointField::new(parse_expr("x^2").unwrap(), parse_expr("x*y").unwrap()).unwrap(),
        PointField::new(parse_expr("y^2 - x").unwrap(), parse_expr("x + y^3").unwrap()).unwrap(),
    ];
    fields.push(sample_point_field_deg(&mut rng, 2));
    for name in ABS_NAMES {
        let f = abs_invariant(name).unwrap();
        if !f.weight.is_absolute() {
            continue;
        }
        let frf = to_ratfunc(&f.expr()).unwrap();
        for (i, xi) in fields.iter().enumerate() {
            let lie = ProlongedField::new(xi).unwrap().apply_rf(&frf).unwrap();
            assert!(
                lie.is_zero(),
                "{name} is not annihilated by field {i}: {}",
                lie.to_expr()
            );
        }
    }
}

#[test]
fn weight_basis_invariants_transform_with_their_stated_weights() {
    let cfg = ZeroConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for name in ["J1", "J2", "Jt1", "Jt2"] {
        let f = abs_invariant(name).unwrap();
        let e = f.expr();
        for deg in [2, 3] {
            let xi = sample_point_field_deg(&mut rng, deg);
            let verdict =
                relative_invariance_rat(&e, &f.weight.r, &f.weight.s, &xi, &cfg).unwrap();
            assert_eq!(verdict, ZeroVerdict::ProvedZero, "{name} at weight {}", f.weight);
        }
    }
}

#[test]
fn nabla_rejects_weighted_input_and_closes_on_absolute_ones() {
    let err = tresse::invariants::nabla(DeltaDir::X, &parse_expr("u^4").unwrap()).unwrap_err();
    assert!(
        err.to_string().contains("not absolute"),
        "unexpected error: {err}"
    );

    let zero = tresse::invariants::nabla(DeltaDir::P, &parse_expr("7").unwrap()).unwrap();
    assert!(normalize(&zero).unwrap().is_zero_literal());

    // Derivatives of absolute invariants stay absolute.
    let kb = abs_invariant("Kb").unwrap();
    let dkb = tresse::invariants::nabla(DeltaDir::P, &kb.expr()).unwrap();
    let xi = PointField::new(parse_expr("x*y").unwrap(), parse_expr("y^2 - 2*x^2").unwrap()).unwrap();
    let lie = ProlongedField::new(&xi)
        .unwrap()
        .apply_rf(&to_ratfunc(&dkb).unwrap())
        .unwrap();
    assert!(lie.is_zero(), "nabla_p Kb is not absolute: {}", lie.to_expr());
}

#[test]
fn nabla_x_of_j1_differs_from_jt1_by_explicit_lower_order_terms() {
    // (8/3)·∇x J1 = H10/H − 8u¹ − (16/3)(u·u⁵ + u⁴₁₀)/u⁴. The first-order
    // correction terms are forced by the weight (2,1) of H; the ratio H10/H is
    // recovered only modulo them.
    let j1 = abs_invariant("J1").unwrap();
    let op = InvOperator::nabla_x().unwrap();
    let lhs = op
        .apply(&to_ratfunc(&j1.expr()).unwrap(), &Weight::zero())
        .unwrap()
        .mul(&RatFunc::constant(rat(8, 3)))
        .unwrap();
    let jt1 = to_ratfunc(&abs_invariant("Jt1").unwrap().expr()).unwrap();
    let rhs = jt1
        .sub(&rf("8*u^1"))
        .unwrap()
        .sub(&rf("16/3*(u*u^5 + u^4_{10})/u^4"))
        .unwrap();
    assert_rf_eq(&lhs, &rhs, "(8/3) nabla_x J1");
}

#[test]
fn cocycle_pairing_matches_the_weight_flow() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..4 {
        let xi = sample_point_field_deg(&mut rng, 3);
        let (cw, cq) = cocycles(&xi).unwrap();
        let (flow_r, flow_s) = weight_flow(&xi).unwrap();
        // r·D̂x(a) + s·∂yφ = r·C_w + (s−r)·C_q for all (r, s) is equivalent to
        // D̂x(a) = C_w − C_q and ∂yφ = C_q.
        let cw_rf = to_ratfunc(&cw).unwrap();
        let cq_rf = to_ratfunc(&cq).unwrap();
        let flow_r_rf = to_ratfunc(&flow_r).unwrap();
        let flow_s_rf = to_ratfunc(&flow_s).unwrap();
        assert_rf_eq(&flow_r_rf, &cw_rf.sub(&cq_rf).unwrap(), "r-coefficient");
        assert_rf_eq(&flow_s_rf, &cq_rf, "s-coefficient");
    }
}

#[test]
fn check_syzygies_reports_every_relation_as_satisfied() {
    let report = check_syzygies().unwrap();
    assert_eq!(report.relations.len(), 8);
    for rel in &report.relations {
        assert!(
            rel.passed,
            "relation failed: {} with residual {:?}",
            rel.name, rel.residual
        );
    }
    assert!(report.all_passed());
}

#[test]
fn registry_lookup_is_idempotent_under_concurrency() {
    let handles: Vec<_> = (0..8)
        .map(|i| {
            std::thread::spawn(move || {
                let name = if i % 2 == 0 { "Om4_11" } else { "Kb01" };
                if i % 2 == 0 {
                    rel_invariant(name).unwrap().expr().to_string()
                } else {
                    abs_invariant(name).unwrap().expr().to_string()
                }
            })
        })
        .collect();
    let results: Vec<String> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(results[0], results[2]);
    assert_eq!(results[1], results[3]);
    assert_eq!(results[4], results[6]);
    assert_eq!(results[5], results[7]);
}

#[test]
fn restriction_of_named_invariants_matches_known_equations() {
    let h = rel_invariant("H").unwrap().expr();

    // Trivial equation: every invariant of positive H-degree dies.
    let trivial = Ode::new(parse_expr("0").unwrap()).unwrap();
    let restricted = restrict(&h, &trivial).unwrap();
    assert!(normalize(&restricted).unwrap().is_zero_literal());

    // Every p-derivative of e^p is e^p, so H| = e^{3p}; the canonical form
    // spells that as a cube of the exponential atom.
    let expo = Ode::new(parse_expr("exp(p)").unwrap()).unwrap();
    let restricted = to_ratfunc(&restrict(&h, &expo).unwrap()).unwrap();
    assert_rf_eq(&restricted, &rf("exp(p)^3"), "H restricted to y'' = e^p");

    // Om6 on the same equation: u⁶ − (6/5)(u⁵)²/u⁴ restricts to −e^p/5.
    let om6 = rel_invariant("Om6").unwrap().expr();
    let restricted = to_ratfunc(&restrict(&om6, &expo).unwrap()).unwrap();
    assert_rf_eq(&restricted, &rf("-exp(p)/5"), "Om6 restricted to y'' = e^p");

    // And the quartic equation y'' = p^4 makes I constant.
    let quartic = Ode::new(parse_expr("p^4").unwrap()).unwrap();
    let i = rel_invariant("I").unwrap().expr();
    let restricted = to_ratfunc(&restrict(&i, &quartic).unwrap()).unwrap();
    assert_rf_eq(&restricted, &rf("24"), "I restricted to y'' = p^4");
}
