//! Timing breakdown of the stratum frame computations.

use std::time::Instant;

use tresse::jetspace::{transform_ode, PointMap};
use tresse::projective::{
    commutator_invariants, extract_cubic, invariant_ratios, liouville, CubicOde,
};
use tresse::symcore::{parse_expr, to_ratfunc};
use tresse::Result;

fn poly_len(e: &tresse::symcore::Expr) -> usize {
    e.node_count()
}

fn main() -> Result<()> {
    let c = CubicOde::parse("x*y", "y^2", "x", "1")?;

    let t = Instant::now();
    let lv = liouville(&c)?;
    println!("liouville(src): {:?}", t.elapsed());
    println!(
        "  nodes: L1 {} L2 {} F3 {} Psi1 {} Psi2 {}",
        poly_len(&lv.l1),
        poly_len(&lv.l2),
        poly_len(&lv.f3),
        poly_len(&lv.psi1),
        poly_len(&lv.psi2)
    );

    let t = Instant::now();
    let rf = to_ratfunc(&lv.f3)?;
    println!("to_ratfunc(F3): {:?} (is_poly: {})", t.elapsed(), !rf.to_expr().is_zero_literal());

    let t = Instant::now();
    let (r1, r2) = invariant_ratios(&c)?;
    println!("invariant_ratios(src): {:?} nodes {} {}", t.elapsed(), poly_len(&r1), poly_len(&r2));

    let t = Instant::now();
    let (i1, i2) = commutator_invariants(&c)?;
    println!(
        "commutator_invariants(src): {:?} nodes {} {}",
        t.elapsed(),
        poly_len(&i1),
        poly_len(&i2)
    );

    let t = Instant::now();
    let map = PointMap::new(parse_expr("2*x + y + 1")?, parse_expr("x - y")?)?;
    let moved = transform_ode(&map, &c.ode()?)?;
    let tc = extract_cubic(moved.closed().expect("affine"))?;
    println!("transform+extract: {:?}", t.elapsed());

    let t = Instant::now();
    let lv2 = liouville(&tc)?;
    println!("liouville(dst): {:?}", t.elapsed());
    println!(
        "  nodes: L1 {} L2 {} F3 {} Psi1 {} Psi2 {}",
        poly_len(&lv2.l1),
        poly_len(&lv2.l2),
        poly_len(&lv2.f3),
        poly_len(&lv2.psi1),
        poly_len(&lv2.psi2)
    );

    let t = Instant::now();
    let (s1, s2) = invariant_ratios(&tc)?;
    println!("invariant_ratios(dst): {:?} nodes {} {}", t.elapsed(), poly_len(&s1), poly_len(&s2));

    let t = Instant::now();
    let (k1, k2) = commutator_invariants(&tc)?;
    println!(
        "commutator_invariants(dst): {:?} nodes {} {}",
        t.elapsed(),
        poly_len(&k1),
        poly_len(&k2)
    );
    Ok(())
}
