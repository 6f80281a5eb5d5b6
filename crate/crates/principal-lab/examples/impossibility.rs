//! Exhaustive check that neither contract in {1/4, 1/2} is optimal stable.
//!
//!     cargo run --example impossibility

use principal_lab::harness::experiments::{impossibility, ImpossibilityGrid};

fn main() -> principal_lab::Result<()> {
    let r = impossibility(&ImpossibilityGrid::default())?;
    println!("grid points {} certified {}", r.main.points, r.certified);
    for p in &r.main.policies {
        println!(
            "  p={} stable at {} points, optimal at {}, failing side {}",
            p.policy, p.stable, p.optimal, p.binding
        );
    }
    for p in &r.relaxed_gamma.policies {
        println!("  gamma=0.8: p={} passes={}", p.policy, p.passes);
    }
    Ok(())
}
