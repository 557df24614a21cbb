//! Cubic-stratum oracle suite: coefficient extraction, the tensor pair and its
//! exact transformation law, scaling weights of the derived scalars, the
//! integrability route to the linearization test, lifted fields on the α
//! coordinates, and invariance of the frame scalars under a point map.

use num::BigRational;
use tresse::invariants::rel_invariant;
use tresse::jetspace::{restrict, transform_ode, Ode, PointField, PointMap};
use tresse::projective::{
    alpha_lift_apply, extract_cubic, invariant_ratios, lie_residual_templates, lift_field_alpha,
    linearizable, liouville, liouville_templates, nabla12, stratum_invariants, CubicOde,
    LinVerdict,
};
use tresse::symcore::{
    diff, eval_num, int, is_zero, normalize, parse_expr, to_ratfunc, var, Expr, Symbol,
    VarAssignment,
};
use tresse::{Error, Result};

fn sym(s: &str) -> Symbol {
    Symbol::intern(s)
}

fn assert_same(label: &str, a: &Expr, b: &Expr) {
    let d = normalize(&(a.clone() - b.clone())).expect("normalize");
    assert!(
        is_zero(&d).expect("zero test").is_zero(),
        "{label}: expressions differ",
    );
}

fn const_ratio(num: &Expr, den: &Expr) -> Option<BigRational> {
    let n = to_ratfunc(num).expect("num to ratfunc");
    let d = to_ratfunc(den).expect("den to ratfunc");
    if d.is_zero() {
        return None;
    }
    n.div(&d).expect("division").as_constant()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn extract_cubic_reads_coefficients() -> Result<()> {
    let c = extract_cubic(&Ode::parse("y^2")?)?;
    assert_same("a0 of y''=y^2", &c.alpha()[0], &parse_expr("y^2")?);
    for i in 1..4 {
        assert_same("upper coefficient of y''=y^2", &c.alpha()[i], &int(0));
    }

    let c = extract_cubic(&Ode::parse("(x*p - y)^3")?)?;
    let expect = ["-y^3", "3*x*y^2", "-3*x^2*y", "x^3"];
    for (i, s) in expect.iter().enumerate() {
        assert_same("coefficient of (x p - y)^3", &c.alpha()[i], &parse_expr(s)?);
    }

    assert!(matches!(
        extract_cubic(&Ode::parse("p^4")?),
        Err(Error::NotCubic(_))
    ));
    Ok(())
}

#[test]
fn tensor_known_values() -> Result<()> {
    let cases: [(&str, &str, &str, &str); 4] = [
        ("y^2", "-6", "0", "0"),
        ("(x*p - y)^3", "36*y", "-36*x", "0"),
        ("p^2", "0", "0", "0"),
        ("y", "0", "0", "0"),
    ];
    for (f, l1, l2, f3) in cases {
        let lv = liouville(&extract_cubic(&Ode::parse(f)?)?)?;
        assert_same("L1", &lv.l1, &parse_expr(l1)?);
        assert_same("L2", &lv.l2, &parse_expr(l2)?);
        assert_same("F3", &lv.f3, &parse_expr(f3)?);
    }
    Ok(())
}

// L1 Ψ2 − L2 Ψ1 = 3 F3 as polynomials in the symbolic α jets. The identity
// fixes the cubic last term of F3; the printed variant with a quadratic last
// term is not even proportional to the combination.
#[test]
fn psi_pairing_is_three_f3() -> Result<()> {
    let tpl = liouville_templates();
    let comb = normalize(
        &(tpl.l1.clone() * tpl.psi2.clone() - tpl.l2.clone() * tpl.psi1.clone()),
    )?;
    assert_eq!(const_ratio(&comb, &tpl.f3), Some(rat(3, 1)));
    assert_eq!(const_ratio(&comb, &tpl.f3_printed), None);
    Ok(())
}

// Weights under the diagonal field ξ = x ∂x + 2y ∂y. They pin both the
// formulas and the relative weights (2,1), (1,2), (5,5), (3,4), (2,5) in the
// bigrading by (x, y) scaling degrees.
#[test]
fn diagonal_scaling_weights() -> Result<()> {
    let tpl = liouville_templates();
    let xi = PointField::new(var("x"), parse_expr("2*y")?)?;
    let cases: [(&str, &Expr, i64); 5] = [
        ("L1", &tpl.l1, -4),
        ("L2", &tpl.l2, -5),
        ("F3", &tpl.f3, -15),
        ("Psi1", &tpl.psi1, -10),
        ("Psi2", &tpl.psi2, -11),
    ];
    for (name, e, w) in cases {
        let lifted = alpha_lift_apply(&xi, e)?;
        assert_eq!(const_ratio(&lifted, e), Some(rat(w, 1)), "weight of {name}");
    }
    let lifted = alpha_lift_apply(&xi, &tpl.f3_printed)?;
    assert_eq!(
        const_ratio(&lifted, &tpl.f3_printed),
        None,
        "the printed variant must not scale as a relative scalar",
    );
    Ok(())
}

// The pair (L1, L2) transforms as a tensor: along the lift of ξ = a ∂x + b ∂y,
//   X(L1) = -(2 a_x + b_y) L1 - b_x L2,
//   X(L2) = -a_y L1 - (a_x + 2 b_y) L2,
// exactly, for arbitrary coefficient fields.
#[test]
fn tensor_transformation_law() -> Result<()> {
    let tpl = liouville_templates();
    for (a, b) in [("x^2 + y", "x*y - 2*y"), ("y^2 - x", "x + y^3")] {
        let xi = PointField::new(parse_expr(a)?, parse_expr(b)?)?;
        let ax = diff(&xi.a, sym("x"))?;
        let ay = diff(&xi.a, sym("y"))?;
        let bx = diff(&xi.b, sym("x"))?;
        let by = diff(&xi.b, sym("y"))?;
        let lhs1 = alpha_lift_apply(&xi, &tpl.l1)?;
        let rhs1 = normalize(
            &(-(int(2) * ax.clone() + by.clone()) * tpl.l1.clone() - bx * tpl.l2.clone()),
        )?;
        assert_same("first tensor component law", &lhs1, &rhs1);
        let lhs2 = alpha_lift_apply(&xi, &tpl.l2)?;
        let rhs2 =
            normalize(&(-ay * tpl.l1.clone() - (ax + int(2) * by) * tpl.l2.clone()))?;
        assert_same("second tensor component law", &lhs2, &rhs2);
    }
    Ok(())
}

// Cross-derivative residuals of the first-order (z, w) system are exactly
// (1/3) L1 and -(1/3) L2, so the system is Frobenius-integrable iff the
// tensor vanishes. This is the content of the linearization test.
#[test]
fn integrability_residuals_are_the_tensor() -> Result<()> {
    let tpl = liouville_templates();
    let (rz, rw) = lie_residual_templates()?;
    assert_eq!(const_ratio(&rz, &tpl.l1), Some(rat(1, 3)));
    assert_eq!(const_ratio(&rw, &tpl.l2), Some(rat(-1, 3)));
    Ok(())
}

#[test]
fn linearization_verdicts() -> Result<()> {
    let cases: [(&str, LinVerdict); 5] = [
        ("y", LinVerdict::Linearizable),
        ("p^2", LinVerdict::Linearizable),
        ("y^2", LinVerdict::NotLinearizable),
        ("(x*p - y)^3", LinVerdict::NotLinearizable),
        ("p^4", LinVerdict::NotCubic),
    ];
    for (f, want) in cases {
        assert_eq!(linearizable(&Ode::parse(f)?)?, want, "verdict for y''={f}");
    }
    Ok(())
}

// Coefficients of lifted fields on the α coordinates. ∂x moves nothing; the
// two diagonal generators act with the expected integer weights (i - 2) and
// (1 - i) on α_i.
#[test]
fn lifted_alpha_coefficients() -> Result<()> {
    let phis = lift_field_alpha(&PointField::new(int(1), int(0))?)?;
    for phi in &phis {
        assert_same("lift of d/dx", phi, &int(0));
    }

    let phis = lift_field_alpha(&PointField::new(var("x"), int(0))?)?;
    for (i, phi) in phis.iter().enumerate() {
        let want = normalize(&(int(i as i64 - 2) * var(&format!("al{i}"))))?;
        assert_same("lift of x d/dx", phi, &want);
    }

    let phis = lift_field_alpha(&PointField::new(int(0), var("y"))?)?;
    for (i, phi) in phis.iter().enumerate() {
        let want = normalize(&(int(1 - i as i64) * var(&format!("al{i}"))))?;
        assert_same("lift of y d/dy", phi, &want);
    }
    Ok(())
}

// On the cubic stratum the restricted order-4 generic invariant collapses
// onto the tensor: H| = -2 (L1 + p L2), with the same constant for every
// equation.
#[test]
fn restricted_h_is_minus_two_tensor() -> Result<()> {
    let h = rel_invariant("H")?;
    let cases: [[&str; 4]; 4] = [
        ["y^2", "0", "0", "0"],
        ["x*y", "y^2", "x", "1"],
        ["y^3 - x", "0", "x^2", "y"],
        ["-y^3", "3*x*y^2", "-3*x^2*y", "x^3"],
    ];
    for [a0, a1, a2, a3] in cases {
        let c = CubicOde::parse(a0, a1, a2, a3)?;
        let lv = liouville(&c)?;
        let hres = restrict(&h.expr(), &c.ode()?)?;
        let lin = normalize(&(lv.l1.clone() + var("p") * lv.l2.clone()))?;
        assert_eq!(const_ratio(&hres, &lin), Some(rat(-2, 1)));
    }
    Ok(())
}

#[test]
fn degenerate_frame_is_rejected() -> Result<()> {
    // F3 vanishes identically here although the tensor does not.
    let c = extract_cubic(&Ode::parse("(x*p - y)^3")?)?;
    assert!(matches!(
        invariant_ratios(&c),
        Err(Error::DegenerateFrame(_))
    ));
    assert!(matches!(
        nabla12(1, &var("x"), &c),
        Err(Error::DegenerateFrame(_))
    ));
    Ok(())
}

fn eval_at(e: &Expr, x: f64, y: f64) -> Result<num::complex::Complex64> {
    let mut a = VarAssignment::new();
    a.set("x", x).set("y", y);
    Ok(eval_num(e, &a)?.value)
}

// The four scalars produced on the stratum are absolute invariants: moving a
// generic cubic equation through an orientation-preserving affine map and
// evaluating at matched points must reproduce the same values.
#[test]
fn frame_scalars_survive_point_maps() -> Result<()> {
    let c = CubicOde::parse("x*y", "y^2", "x", "1")?;
    let map = PointMap::new(parse_expr("2*x + y + 1")?, parse_expr("x + y")?)?;
    let moved = transform_ode(&map, &c.ode()?)?;
    let tc = extract_cubic(moved.closed().expect("affine maps invert"))?;
    let inv_src = stratum_invariants(&c)?;
    let inv_dst = stratum_invariants(&tc)?;
    assert_eq!(inv_src.len(), 4);
    let names: Vec<&str> = inv_src.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        ["I1", "I2", "nabla1(F3)/F3", "nabla2(F3)/F3"],
    );
    for (x0, y0) in [(0.7, 0.3), (1.1, -0.4), (0.5, 1.3)] {
        for k in 0..4 {
            let (name, esrc) = &inv_src[k];
            let (_, edst) = &inv_dst[k];
            let vs = eval_at(esrc, x0, y0)?;
            let vd = eval_at(edst, 2.0 * x0 + y0 + 1.0, x0 + y0)?;
            let dev = (vs - vd).norm() / (1.0 + vs.norm());
            assert!(
                dev < 1e-5,
                "{name} at ({x0}, {y0}): src {vs} dst {vd} rel-dev {dev:.2e}",
            );
        }
    }
    Ok(())
}

// The packaged ratio invariants agree with applying the frame derivations to
// F3 directly and dividing pointwise.
#[test]
fn ratio_invariants_match_frame_derivations() -> Result<()> {
    let c = CubicOde::parse("x*y", "y^2", "x", "1")?;
    let lv = liouville(&c)?;
    let (r1, r2) = invariant_ratios(&c)?;
    let n1 = nabla12(1, &lv.f3, &c)?;
    let n2 = nabla12(2, &lv.f3, &c)?;
    for (x0, y0) in [(0.7, 0.3), (0.5, 1.3)] {
        let f3v = eval_at(&lv.f3, x0, y0)?;
        let d1 = (eval_at(&n1, x0, y0)? / f3v - eval_at(&r1, x0, y0)?).norm();
        let d2 = (eval_at(&n2, x0, y0)? / f3v - eval_at(&r2, x0, y0)?).norm();
        assert!(d1 < 1e-8 && d2 < 1e-8, "pointwise mismatch: {d1:.2e} {d2:.2e}");
    }
    Ok(())
}
