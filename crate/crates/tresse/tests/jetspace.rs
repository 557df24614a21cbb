//! Jet-calculus contracts: the restriction oracle, the homomorphism property
//! of prolongation, and transform coherence.

use num::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tresse::jetspace::{
    lie_derivative, restrict, sample_point_field, total_derivative, transform_ode, Dir, Ode,
    OdeRep, PointField, PointMap, SectionCtx,
};
use tresse::symcore::{diff, eval_num, int, normalize, parse_expr, var, Expr, Symbol, VarAssignment};

fn pe(s: &str) -> Expr {
    parse_expr(s).unwrap()
}

fn n(e: &Expr) -> Expr {
    normalize(e).unwrap()
}

/// restrict(D e, f) == δ restrict(e, f) for the three frame directions, where
/// δ is ∂p, ∂y, or ∂x + p∂y. Exact symbolic equality after normalization.
#[test]
fn restriction_commutes_with_total_derivatives() {
    let odes: Vec<Ode> = ["0", "y*y", "p^4", "x*p^3 + y", "exp(p)"]
        .iter()
        .map(|s| Ode::parse(s).unwrap())
        .collect();
    let polynomial_exprs = [
        "u",
        "u^1",
        "u_{10}",
        "u_{01}",
        "u^4",
        "u*u^1",
        "u_{10}*u^2 + u_{01}",
        "x*u^1_{11}",
        "u^2_{31}",
        "p*u^3 + y*u_{20}",
    ];
    let dirs = [Dir::P, Dir::Y, Dir::XHat];
    let check = |e: &Expr, ode: &Ode| {
        for dir in dirs {
            let lhs = restrict(&total_derivative(dir, e).unwrap(), ode).unwrap();
            let r = restrict(e, ode).unwrap();
            let rhs = match dir {
                Dir::P => diff(&r, Symbol::intern("p")).unwrap(),
                Dir::Y => diff(&r, Symbol::intern("y")).unwrap(),
                Dir::XHat => {
                    let rx = diff(&r, Symbol::intern("x")).unwrap();
                    let ry = diff(&r, Symbol::intern("y")).unwrap();
                    rx + var("p") * ry
                }
                Dir::X => unreachable!(),
            };
            assert_eq!(n(&lhs), n(&rhs), "dir {dir:?} on {e} over {}", ode.f());
        }
    };
    for ode in &odes {
        for src in polynomial_exprs {
            check(&pe(src), ode);
        }
    }
    // Rational and root expressions need a section with nonvanishing u^4.
    let exp_ode = Ode::parse("exp(p)").unwrap();
    for src in ["u^5/u^4", "sqrt(u^4)", "u^4_{10}/u^4 + u*u^5"] {
        check(&pe(src), &exp_ode);
    }
}

/// Jet coordinates of order ≤ k, plus the base coordinates.
fn basis_exprs(order: u8) -> Vec<Expr> {
    let mut out = vec![pe("x"), pe("y"), pe("p")];
    for total in 0..=order {
        for l in 0..=total {
            for m in 0..=(total - l) {
                let k = total - l - m;
                let j = tresse::jetspace::JetVar::new(l, m, k).unwrap();
                out.push(j.expr());
            }
        }
    }
    out
}

#[test]
fn prolongation_is_a_lie_algebra_homomorphism() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..2 {
        let xi = sample_point_field(&mut rng);
        let eta = sample_point_field(&mut rng);
        let bracket = xi.bracket(&eta).unwrap();
        for e in basis_exprs(4) {
            let lhs = lie_derivative(&bracket, &e, 4).unwrap();
            let a = lie_derivative(&eta, &e, 4).unwrap();
            let b = lie_derivative(&xi, &e, 4).unwrap();
            let rhs = normalize(
                &(lie_derivative(&xi, &a, 5).unwrap() - lie_derivative(&eta, &b, 5).unwrap()),
            )
            .unwrap();
            assert_eq!(n(&lhs), rhs, "on basis element {e}");
        }
    }
}

#[test]
fn lie_derivative_enforces_the_order_precondition() {
    let xi = PointField::new(var("x"), var("y")).unwrap();
    let err = lie_derivative(&xi, &pe("u^2_{31}"), 4).unwrap_err();
    assert!(err.to_string().contains("order"));
    assert!(lie_derivative(&xi, &pe("u^2_{31}"), 6).is_ok());
}

#[test]
fn transform_composes_symbolically_for_affine_maps() {
    let ode = Ode::parse("y*y + x*p").unwrap();
    let psi = PointMap::new(pe("x + 2*y"), pe("y - x")).unwrap();
    let phi = PointMap::new(pe("3*x + 1"), pe("x + y")).unwrap();
    let composed = phi.compose(&psi).unwrap();
    let via_composed = transform_ode(&composed, &ode).unwrap();
    let inner = transform_ode(&psi, &ode).unwrap();
    let via_steps = transform_ode(&phi, inner.closed().unwrap()).unwrap();
    assert_eq!(
        n(via_composed.closed().unwrap().f()),
        n(via_steps.closed().unwrap().f())
    );
}

#[test]
fn transform_composes_numerically_with_a_general_outer_map() {
    let ode = Ode::parse("y*y").unwrap();
    let psi = PointMap::new(pe("x + y"), pe("y")).unwrap();
    let phi = PointMap::new(pe("x"), pe("y + x*x")).unwrap();
    let inner = transform_ode(&psi, &ode).unwrap();
    let e1 = inner.closed().expect("affine map gives a closed form").clone();
    let lhs = transform_ode(&phi.compose(&psi).unwrap(), &ode).unwrap();
    let rhs = transform_ode(&phi, &e1).unwrap();
    assert!(matches!(rhs, OdeRep::Mapped { .. }), "quadratic map stays mapped");
    let ctx_lhs = lhs.ctx().unwrap();
    let ctx_rhs = rhs.ctx().unwrap();

    // A source point for the composed map corresponds to its ψ-image for the
    // stepwise map; both give jets of the same final equation at the same
    // target point.
    let pts = [(0.3, 0.7, 0.2), (1.1, -0.4, 0.9), (-0.6, 0.5, 1.3)];
    for (x0, y0, p0) in pts {
        let (x, y, p) = (Complex::new(x0, 0.0), Complex::new(y0, 0.0), Complex::new(p0, 0.0));
        // ψ is affine: push the base point by hand.
        let mut a = VarAssignment::new();
        a.set("x", x).set("y", y).set("p", p);
        let sx = eval_num(&psi.x, &a).unwrap().value;
        let sy = eval_num(&psi.y, &a).unwrap().value;
        let sp = eval_num(&psi.p_tilde().unwrap(), &a).unwrap().value;
        for (l, m, k) in [(0, 0, 0), (0, 0, 1), (1, 0, 1), (0, 2, 0)] {
            let v1 = ctx_lhs.jet_value(l, m, k, x, y, p).unwrap();
            let v2 = ctx_rhs.jet_value(l, m, k, sx, sy, sp).unwrap();
            assert!(
                (v1 - v2).norm() <= 1e-8 * (1.0 + v1.norm().max(v2.norm())),
                "jet ({l},{m},{k}) at ({x0},{y0},{p0}): {v1} vs {v2}"
            );
        }
    }
}

#[test]
fn pushforward_jets_match_the_closed_transform_for_affine_maps() {
    let ode = Ode::parse("y*y + exp(p)").unwrap();
    let map = PointMap::new(pe("2*x - y + 1"), pe("x + y")).unwrap();
    let closed = match transform_ode(&map, &ode).unwrap() {
        OdeRep::Closed(o) => o,
        OdeRep::Mapped { .. } => panic!("affine map must close"),
    };
    let ctx_push = SectionCtx::pushforward(&map, &ode).unwrap();
    let ctx_closed = SectionCtx::plain(&closed).unwrap();
    let pts = [(0.4, 0.8, 0.3), (1.2, -0.2, 0.7)];
    for (x0, y0, p0) in pts {
        let (x, y, p) = (Complex::new(x0, 0.0), Complex::new(y0, 0.0), Complex::new(p0, 0.0));
        let (ix, iy, ip) = ctx_push.image_point(x, y, p).unwrap();
        for (l, m, k) in [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 2), (1, 1, 1)] {
            let v1 = ctx_push.jet_value(l, m, k, x, y, p).unwrap();
            let v2 = ctx_closed.jet_value(l, m, k, ix, iy, ip).unwrap();
            assert!(
                (v1 - v2).norm() <= 1e-8 * (1.0 + v1.norm().max(v2.norm())),
                "jet ({l},{m},{k}): {v1} vs {v2}"
            );
        }
    }
}

#[test]
fn singular_maps_are_rejected() {
    assert!(PointMap::new(var("x"), var("x")).is_err());
    assert!(PointMap::new(int(1), var("y")).is_err());
    assert!(PointMap::new(pe("x*y"), pe("x*y + 1")).is_err());
}
