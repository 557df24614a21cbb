//! Defining-invariance oracle probe: ξ̂(F) + (r·D̂x(a) + s·∂yφ)·F must vanish
//! identically for every point field. Exercise a few named invariants against
//! fixed polynomial fields.

use std::time::Instant;

use tresse::jetspace::{relative_invariance_rat, PointField};
use tresse::invariants::rel_invariant;
use tresse::symcore::{parse_expr, ZeroConfig};

fn main() -> tresse::Result<()> {
    let fields = [
        ("x^2, x*y", PointField::new(parse_expr("x^2")?, parse_expr("x*y")?)?),
        ("y^2 - x, x + y^3", PointField::new(parse_expr("y^2 - x")?, parse_expr("x + y^3")?)?),
        ("x*y, y^2 - 2*x^2", PointField::new(parse_expr("x*y")?, parse_expr("y^2 - 2*x^2")?)?),
    ];
    let cfg = ZeroConfig::default();
    for name in ["H", "H10", "K", "H01", "Om5_10"] {
        let f = rel_invariant(name)?;
        for (label, xi) in &fields {
            let t = Instant::now();
            let verdict = relative_invariance_rat(&f.expr(), &f.weight.r, &f.weight.s, xi, &cfg)?;
            println!(
                "{:8} vs ({label}): {:?} [{:?}]",
                name,
                verdict,
                t.elapsed()
            );
        }
    }
    Ok(())
}
