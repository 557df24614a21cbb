//! Walk through the jet-calculus layer: total derivatives, prolongation,
//! restriction and point transformation on a concrete equation.
//!
//! Run with: cargo run -p tresse --example jet_walkthrough

use tresse::jetspace::{
    cocycles, prolong_field, restrict, total_derivative, transform_ode, Dir, JetVar, Ode,
    PointField, PointMap,
};
use tresse::symcore::{normalize, parse_expr, var};

fn main() -> tresse::Result<()> {
    // Total derivatives in the non-holonomic frame.
    let e = parse_expr("x*u + u^3")?;
    println!("e                = {e}");
    println!("D^x(e)           = {}", total_derivative(Dir::XHat, &e)?);
    println!("Dy(e)            = {}", total_derivative(Dir::Y, &e)?);
    println!("Dp(e)            = {}", total_derivative(Dir::P, &e)?);
    println!("Dp(u_{{10}})       = {}", total_derivative(Dir::P, &parse_expr("u_{10}")?)?);

    // Prolong the scaling field x∂x + y∂y to second order.
    let xi = PointField::new(var("x"), var("y"))?;
    let pr = prolong_field(&xi, 2)?;
    println!("\nprolongation of x*dx + y*dy:");
    println!("  dp coefficient = {}", pr.dp);
    for (j, c) in &pr.jets {
        println!("  u^{}_{{{}{}}} coefficient = {}", j.k, j.l, j.m, c);
    }
    let (cw, cq) = cocycles(&xi)?;
    println!("  cocycles: C_w = {cw}, C_q = {cq}");

    // Restrict the fourth fiber derivative to concrete equations.
    let quartic = Ode::parse("p^4")?;
    println!("\nrestrict(u^4, y'' = p^4)   = {}", restrict(&JetVar::new(0, 0, 4)?.expr(), &quartic)?);
    let cubic = Ode::parse("1 + p + p*p + p*p*p")?;
    println!("restrict(u^4, cubic rhs)   = {}", restrict(&JetVar::new(0, 0, 4)?.expr(), &cubic)?);

    // Push an equation through an affine point map.
    let ode = Ode::parse("y*y")?;
    let map = PointMap::new(var("x"), parse_expr("3*y")?)?;
    let out = transform_ode(&map, &ode)?;
    println!(
        "\n(x, 3y) applied to y'' = y^2 gives y'' = {}",
        normalize(out.closed().expect("affine map closes").f())?
    );
    Ok(())
}
