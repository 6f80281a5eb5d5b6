//! Randomized lemma and oracle suites on a small budget.
//!
//!     cargo run --release --example lemma_suites

use principal_lab::harness::lemmas::{verify_all, LemmaOptions};

fn main() -> principal_lab::Result<()> {
    let opts = LemmaOptions {
        cases: 200,
        linear_oracle_cases: 500,
        persuasion_oracle_cases: 100,
        ..LemmaOptions::default()
    };
    for s in verify_all(&opts)? {
        println!(
            "{:<20} {:>5} cases {:>3} failures {:?}",
            s.name, s.cases, s.failures, s.example
        );
    }
    Ok(())
}
