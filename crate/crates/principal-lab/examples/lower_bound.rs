//! The clairvoyant adversary against the general mechanism on the work/shirk game.
//!
//!     cargo run --release --example lower_bound

use principal_lab::cli::configs_dir;
use principal_lab::harness::experiments::lower_bound;
use principal_lab::harness::ExperimentConfig;

fn main() -> principal_lab::Result<()> {
    let mut cfg = ExperimentConfig::load(&configs_dir().join("lower-bound.json"))?;
    cfg.repetitions = 8;
    let r = lower_bound(&cfg)?;
    for arm in &r.arms {
        println!(
            "first={} PR={:.4} +/- {:.4} SwapReg/T<={:.4} NegReg/T>={:.4} balanced={:.2}",
            arm.first_state, arm.pr, arm.pr_stderr, arm.swap_reg_max, arm.neg_reg_min, arm.balanced_all_fraction
        );
    }
    println!("max PR {:.4}", r.max_pr);
    Ok(())
}
