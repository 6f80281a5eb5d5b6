//! One experiment from a bundled config, with the regret decomposition per repetition.
//!
//!     cargo run --release --example regret_run [config name]

use principal_lab::cli::configs_dir;
use principal_lab::harness::{run_experiment, ExperimentConfig};

fn main() -> principal_lab::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "linear-anti".into());
    let mut cfg = ExperimentConfig::load(&configs_dir().join(format!("{name}.json")))?;
    cfg.repetitions = cfg.repetitions.min(4);
    let out = run_experiment(&cfg, Some(4096))?;
    let r = &out.report;
    println!(
        "{name}: T={} PR={:.4} +/- {:.4} against {}",
        r.horizon, r.pr, r.pr_stderr, r.benchmarks[r.pr_benchmark].policy
    );
    println!(
        "mean V={:.4} SwapReg/T={:.5} NegReg/T={:.5}",
        r.realized.mean_v, r.realized.swap_reg, r.realized.neg_reg
    );
    for row in &r.decomposition.rows {
        println!(
            "  rep {}: (a)={:.2} (b)={:.2} (c)={:.2} sum={:.2}",
            row.rep, row.a, row.b, row.c, row.regret_sum
        );
    }
    println!("max residual {:.2e}", r.decomposition.max_residual);
    Ok(())
}
