//! Run the commutation-relation checker and print each relation's outcome.

use std::time::Instant;

fn main() -> tresse::Result<()> {
    let t = Instant::now();
    let report = tresse::invariants::check_syzygies()?;
    for rel in &report.relations {
        println!(
            "{} {}",
            if rel.passed { "PASS" } else { "FAIL" },
            rel.name
        );
        if let Some(res) = &rel.residual {
            let trunc: String = res.chars().take(400).collect();
            println!("     residual: {trunc}");
        }
    }
    println!("all passed: {} [{:?}]", report.all_passed(), t.elapsed());
    Ok(())
}
