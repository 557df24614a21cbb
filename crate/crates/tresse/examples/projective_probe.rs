//! Exploratory checks for the cubic-stratum module: prints the symbolic
//! relations the test suite pins down.

use num::BigRational;
use tresse::jetspace::{restrict, Ode, PointField};
use tresse::projective::{
    alpha_lift_apply, extract_cubic, lie_residual_templates, liouville, liouville_templates,
    CubicOde,
};
use tresse::symcore::{int, is_zero, normalize, parse_expr, to_ratfunc, var, Expr};
use tresse::Result;

fn show(label: &str, e: &Expr) {
    let s = format!("{e}");
    if s.len() > 160 {
        println!("{label}: [{} chars, {} nodes]", s.len(), e.node_count());
    } else {
        println!("{label}: {s}");
    }
}

fn ratio_of(num: &Expr, den: &Expr) -> Result<Option<BigRational>> {
    let n = to_ratfunc(num)?;
    let d = to_ratfunc(den)?;
    if d.is_zero() {
        return Ok(None);
    }
    Ok(n.div(&d)?.as_constant())
}

fn main() -> Result<()> {
    let t0 = std::time::Instant::now();
    let tpl = liouville_templates();
    println!("-- templates --");
    show("L1", &tpl.l1);
    show("L2", &tpl.l2);
    println!("F3 nodes: {}", tpl.f3.node_count());
    println!("F3_printed nodes: {}", tpl.f3_printed.node_count());
    println!("Psi1 nodes: {}", tpl.psi1.node_count());
    println!("Psi2 nodes: {}", tpl.psi2.node_count());

    println!("-- identity L1*Psi2 - L2*Psi1 vs 3*F3 --");
    let comb = normalize(
        &(tpl.l1.clone() * tpl.psi2.clone() - tpl.l2.clone() * tpl.psi1.clone()),
    )?;
    match ratio_of(&comb, &tpl.f3)? {
        Some(c) => println!("  (L1 Psi2 - L2 Psi1)/F3 = {c}"),
        None => println!("  not a constant multiple of F3"),
    }
    match ratio_of(&comb, &tpl.f3_printed)? {
        Some(c) => println!("  (L1 Psi2 - L2 Psi1)/F3_printed = {c}"),
        None => println!("  not a constant multiple of F3_printed"),
    }

    println!("-- frobenius residual templates --");
    let (rz, rw) = lie_residual_templates()?;
    show("Rz", &rz);
    show("Rw", &rw);
    match ratio_of(&rz, &tpl.l1)? {
        Some(c) => println!("  Rz/L1 = {c}"),
        None => println!("  Rz not const * L1"),
    }
    match ratio_of(&rw, &tpl.l2)? {
        Some(c) => println!("  Rw/L2 = {c}"),
        None => println!("  Rw not const * L2"),
    }

    println!("-- tensor law under general fields --");
    for (a, b) in [("x^2 + y", "x*y - 2*y"), ("y^2 - x", "x + y^3"), ("x", "0")] {
        let xi = PointField::new(parse_expr(a)?, parse_expr(b)?)?;
        let ax = tresse::symcore::diff(&xi.a, tresse::symcore::Symbol::intern("x"))?;
        let ay = tresse::symcore::diff(&xi.a, tresse::symcore::Symbol::intern("y"))?;
        let bx = tresse::symcore::diff(&xi.b, tresse::symcore::Symbol::intern("x"))?;
        let by = tresse::symcore::diff(&xi.b, tresse::symcore::Symbol::intern("y"))?;
        let lhs1 = alpha_lift_apply(&xi, &tpl.l1)?;
        let rhs1 = normalize(
            &(-(int(2) * ax.clone() + by.clone()) * tpl.l1.clone() - bx.clone() * tpl.l2.clone()),
        )?;
        let z1 = is_zero(&normalize(&(lhs1 - rhs1))?)?;
        let lhs2 = alpha_lift_apply(&xi, &tpl.l2)?;
        let rhs2 = normalize(
            &(-ay.clone() * tpl.l1.clone() - (ax + int(2) * by) * tpl.l2.clone()),
        )?;
        let z2 = is_zero(&normalize(&(lhs2 - rhs2))?)?;
        println!("  xi=({a}, {b}): L1 law {z1:?}, L2 law {z2:?}");
    }

    println!("-- diagonal scaling xi = (x, 2y) --");
    let xi = PointField::new(var("x"), parse_expr("2*y")?)?;
    for (name, e) in [
        ("L1", &tpl.l1),
        ("L2", &tpl.l2),
        ("F3", &tpl.f3),
        ("F3_printed", &tpl.f3_printed),
        ("Psi1", &tpl.psi1),
        ("Psi2", &tpl.psi2),
    ] {
        let lifted = alpha_lift_apply(&xi, e)?;
        match ratio_of(&lifted, e)? {
            Some(c) => println!("  X({name}) = {c} * {name}"),
            None => println!("  X({name}) not proportional to {name}"),
        }
    }

    println!("-- known equations --");
    for (label, f) in [
        ("y''=y^2", "y^2"),
        ("y''=(x*p-y)^3", "(x*p - y)^3"),
        ("y''=p^2", "p^2"),
        ("y''=y", "y"),
    ] {
        let ode = Ode::parse(f)?;
        let c = extract_cubic(&ode)?;
        let lv = liouville(&c)?;
        println!("{label}:");
        show("  L1", &lv.l1);
        show("  L2", &lv.l2);
        show("  F3", &lv.f3);
        let h = tresse::invariants::rel_invariant("H")?;
        let hres = restrict(&h.expr(), &ode)?;
        show("  H|", &hres);
        let lin = normalize(&(lv.l1.clone() + var("p") * lv.l2.clone()))?;
        if !is_zero(&lin)?.is_zero() {
            match ratio_of(&hres, &lin)? {
                Some(cst) => println!("  H| / (L1 + p L2) = {cst}"),
                None => println!("  H| not const * (L1 + p L2)"),
            }
        }
    }

    println!("-- generic cubic: H proportionality --");
    for (a0, a1, a2, a3) in [
        ("x*y", "y^2", "x", "1"),
        ("y^3 - x", "0", "x^2", "y"),
    ] {
        let c = CubicOde::parse(a0, a1, a2, a3)?;
        let lv = liouville(&c)?;
        let ode = c.ode()?;
        let h = tresse::invariants::rel_invariant("H")?;
        let hres = restrict(&h.expr(), &ode)?;
        let lin = normalize(&(lv.l1.clone() + var("p") * lv.l2.clone()))?;
        match ratio_of(&hres, &lin)? {
            Some(cst) => println!("  alpha=({a0},{a1},{a2},{a3}): H|/(L1+p L2) = {cst}"),
            None => println!("  alpha=({a0},{a1},{a2},{a3}): not constant"),
        }
    }

    println!("-- numeric invariance of the frame scalars under an affine map --");
    numeric_invariance()?;

    println!("total {:?}", t0.elapsed());
    Ok(())
}

// Push a generic cubic through an orientation-preserving affine map and
// compare the absolute scalars at matched points.
fn numeric_invariance() -> Result<()> {
    use tresse::jetspace::{transform_ode, PointMap};
    use tresse::projective::stratum_invariants;
    use tresse::symcore::{eval_num, VarAssignment};

    let c = CubicOde::parse("x*y", "y^2", "x", "1")?;
    let map = PointMap::new(parse_expr("2*x + y + 1")?, parse_expr("x + y")?)?;
    let moved = transform_ode(&map, &c.ode()?)?;
    let tc = extract_cubic(moved.closed().expect("affine maps invert"))?;
    let inv_src = stratum_invariants(&c)?;
    let inv_dst = stratum_invariants(&tc)?;
    for (x0, y0) in [(0.7, 0.3), (1.1, -0.4), (0.5, 1.3)] {
        let mut asrc = VarAssignment::new();
        asrc.set("x", x0).set("y", y0);
        let xt = 2.0 * x0 + y0 + 1.0;
        let yt = x0 + y0;
        let mut adst = VarAssignment::new();
        adst.set("x", xt).set("y", yt);
        for k in 0..4 {
            let (name, esrc) = &inv_src[k];
            let (_, edst) = &inv_dst[k];
            let vs = eval_num(esrc, &asrc)?.value;
            let vd = eval_num(edst, &adst)?.value;
            let dev = (vs - vd).norm() / (1.0 + vs.norm());
            println!("  ({x0},{y0}) {name}: src {vs:.6} dst {vd:.6} rel-dev {dev:.2e}");
        }
    }
    Ok(())
}
