//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a check came out negative, 2 config or usage error, 3 runtime failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::experiments::{self, ImpossibilityGrid};
use crate::harness::lemmas::{self, LemmaOptions};
use crate::harness::report::{create, schema_line, write_bias, write_json, write_run};
use crate::harness::{run_experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(
    name = "principal-lab",
    version,
    about = "Repeated principal-agent experiments with forecast-driven mechanisms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Experiment config (JSON)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the config seed
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the number of repetitions
    #[arg(long, global = true)]
    pub reps: Option<usize>,
    /// Suppress the summary on stdout
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// One experiment: transcript.csv and report.json
    Run,
    /// PR against every horizon in `horizons`: sweep.csv
    Sweep,
    /// Forecast bias per event and horizon: bias.csv
    AuditBias,
    /// Randomized lemma and oracle suites: lemmas.csv
    VerifyLemmas,
    /// Adversary against the configured mechanism under both first states: lower_bound.json
    LowerBound,
    /// Exhaustive check that no benchmark policy is optimal stable: impossibility.json
    Impossibility,
}

/// Outcome of a subcommand that finished without error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    CheckFailed,
}

impl Common {
    pub fn load_config(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| Error::config("--config", "this subcommand needs a config file"))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.reps {
            if r == 0 {
                return Err(Error::config("--reps", "must be >= 1"));
            }
            cfg.repetitions = r;
        }
        Ok(cfg)
    }

    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.4}"))
}

pub fn execute(cmd: Command, c: &Common) -> Result<Verdict> {
    match cmd {
        Command::Run => {
            let cfg = c.load_config()?;
            let out = run_experiment(&cfg, None)?;
            write_run(&out, &c.out)?;
            let r = &out.report;
            c.say(format!(
                "T={} reps={} PR={:.5} (+/- {:.5}) SwapReg={:.5} NegReg={:.5} max_alpha={:.5}",
                r.horizon, r.repetitions, r.pr, r.pr_stderr, r.realized.swap_reg, r.realized.neg_reg, r.bias.max_alpha
            ));
            Ok(Verdict::Ok)
        }
        Command::Sweep => {
            let cfg = c.load_config()?;
            let res = experiments::sweep(&cfg)?;
            let mut w = create(&c.path("sweep.csv"))?;
            experiments::write_sweep_csv(&res, &mut w)?;
            w.flush()?;
            write_json(&c.path("sweep.json"), &res)?;
            for r in &res.rows {
                c.say(format!(
                    "T={:<6} PR={:.5} (+/- {:.5}) SwapReg={:.5}",
                    r.t, r.pr, r.pr_stderr, r.swap_reg
                ));
            }
            c.say(format!(
                "slope={} nonincreasing={}",
                fmt_opt(res.pr_slope),
                res.nonincreasing
            ));
            Ok(Verdict::Ok)
        }
        Command::AuditBias => {
            let cfg = c.load_config()?;
            let audit = experiments::audit_bias(&cfg)?;
            let mut w = create(&c.path("bias.csv"))?;
            write_bias(&audit.rows, &mut w)?;
            w.flush()?;
            let mut w = csv::Writer::from_writer(schema_line(create(&c.path("bias_summary.csv"))?, "bias-summary")?);
            w.write_record(["T", "max_alpha", "max_alpha_stderr", "calibration_error", "events"])?;
            for p in &audit.points {
                w.serialize((p.t, p.max_alpha, p.max_alpha_stderr, p.calibration_error, p.events))?;
                c.say(format!("T={:<6} max_alpha={:.5} events={}", p.t, p.max_alpha, p.events));
            }
            w.flush()?;
            c.say(format!("slope={}", fmt_opt(audit.slope)));
            Ok(Verdict::Ok)
        }
        Command::VerifyLemmas => {
            let mut opts = LemmaOptions::default();
            if let Some(s) = c.seed {
                opts.seed = s;
            }
            let res = lemmas::verify_all(&opts)?;
            let mut w = create(&c.path("lemmas.csv"))?;
            lemmas::write_lemmas_csv(&res, &mut w)?;
            w.flush()?;
            for s in &res {
                c.say(format!(
                    "{:<28} cases={:<6} failures={:<4} {}",
                    s.name,
                    s.cases,
                    s.failures,
                    if s.passed() { "PASS" } else { "FAIL" }
                ));
            }
            Ok(if res.iter().all(|s| s.passed()) {
                Verdict::Ok
            } else {
                Verdict::CheckFailed
            })
        }
        Command::LowerBound => {
            let cfg = c.load_config()?;
            let rep = experiments::lower_bound(&cfg)?;
            write_json(&c.path("lower_bound.json"), &rep)?;
            for a in &rep.arms {
                c.say(format!(
                    "first={} PR={:.5} (+/- {:.5}) SwapReg/T<={:.5} NegReg/T>={:.5} balanced_all={:.3}",
                    a.first_state, a.pr, a.pr_stderr, a.swap_reg_max, a.neg_reg_min, a.balanced_all_fraction
                ));
            }
            c.say(format!("max PR={:.5}", rep.max_pr));
            Ok(Verdict::Ok)
        }
        Command::Impossibility => {
            let rep = experiments::impossibility(&ImpossibilityGrid::default())?;
            write_json(&c.path("impossibility.json"), &rep)?;
            for p in &rep.main.policies {
                c.say(format!("policy {} passes={} binding={}", p.policy, p.passes, p.binding));
            }
            c.say(format!("grid points={} certified={}", rep.main.points, rep.certified));
            Ok(if rep.certified {
                Verdict::Ok
            } else {
                Verdict::CheckFailed
            })
        }
    }
}

pub fn exit_code(res: &Result<Verdict>) -> u8 {
    match res {
        Ok(Verdict::Ok) => 0,
        Ok(Verdict::CheckFailed) => 1,
        Err(e) if e.is_config() => 2,
        Err(_) => 3,
    }
}

pub fn main_with(cli: Cli) -> ExitCode {
    let res = execute(cli.command, &cli.common);
    if let Err(e) = &res {
        eprintln!("error: {e}");
    }
    ExitCode::from(exit_code(&res))
}

/// Default location of the bundled configs, relative to the crate root.
pub fn configs_dir() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}
