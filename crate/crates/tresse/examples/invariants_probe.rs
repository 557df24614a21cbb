//! Probe run for the invariant registry: build every named generator, print
//! weight, jet order, and node count, and spot-check the kernel identities.

use std::time::Instant;

use tresse::invariants::{
    abs_invariant, delta, rel_invariant, DeltaDir, ABS_NAMES, REL_NAMES,
};

fn main() -> tresse::Result<()> {
    for name in REL_NAMES {
        let t = Instant::now();
        let f = rel_invariant(name)?;
        println!(
            "{:8} weight {:10} order {} nodes {:6} [{:?}]",
            f.name,
            f.weight.to_string(),
            f.order,
            f.expr().node_count(),
            t.elapsed()
        );
    }
    for name in ABS_NAMES {
        let t = Instant::now();
        let f = abs_invariant(name)?;
        println!(
            "{:8} weight {:10} order {} nodes {:6} [{:?}]",
            f.name,
            f.weight.to_string(),
            f.order,
            f.expr().node_count(),
            t.elapsed()
        );
    }

    let i = rel_invariant("I")?;
    for dir in [DeltaDir::P, DeltaDir::X, DeltaDir::Y] {
        let d = delta(dir, &i)?;
        println!("delta {:?} I -> zero: {}", dir, d.expr().is_zero_literal());
    }
    let k = delta(DeltaDir::P, &rel_invariant("H")?)?;
    println!(
        "Dp H == K: {}",
        k.expr().to_string() == rel_invariant("K")?.expr().to_string()
    );
    Ok(())
}
