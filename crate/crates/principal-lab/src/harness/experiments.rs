//! Multi-run experiments: horizon sweeps, bias audits, the lower-bound attack and the
//! impossibility certificate.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, StateRef, StatesConfig};
use super::metrics::{loglog_slope, mean_stderr};
use super::report::schema_line;
use super::run::{prepare, run_experiment, RegretReport};
use super::stream::derive_seed;
use crate::agents::AgentKind;
use crate::error::{Error, Result};
use crate::forecasting::BiasRow;
use crate::game::fixtures::two_action_tie_game;
use crate::game::Forecast;
use crate::oracles::check_optimal_stable;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(rename = "T")]
    pub t: usize,
    pub pr: f64,
    pub pr_stderr: f64,
    pub swap_reg: f64,
    pub max_alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `None` for a single horizon or a nonpositive PR
    pub pr_slope: Option<f64>,
    /// each PR at most the previous one plus two combined standard errors
    pub nonincreasing: bool,
    pub max_residual: f64,
    #[serde(skip)]
    pub reports: Vec<RegretReport>,
}

/// `pr[i+1] <= pr[i] + 2 sqrt(se[i]^2 + se[i+1]^2)` for every consecutive pair.
pub fn nonincreasing_within(rows: &[SweepRow], k: f64) -> bool {
    rows.windows(2)
        .all(|w| w[1].pr <= w[0].pr + k * (w[0].pr_stderr.powi(2) + w[1].pr_stderr.powi(2)).sqrt())
}

pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for t in cfg.horizon_list() {
        let out = run_experiment(cfg, Some(t))?;
        let r = out.report;
        rows.push(SweepRow {
            t,
            pr: r.pr,
            pr_stderr: r.pr_stderr,
            swap_reg: r.realized.swap_reg,
            max_alpha: r.bias.max_alpha,
        });
        reports.push(r);
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
    let prs: Vec<f64> = rows.iter().map(|r| r.pr).collect();
    Ok(SweepResult {
        pr_slope: if rows.len() > 1 { loglog_slope(&ts, &prs) } else { None },
        nonincreasing: nonincreasing_within(&rows, 2.0),
        max_residual: reports.iter().map(|r| r.decomposition.max_residual).fold(0.0, f64::max),
        rows,
        reports,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(res: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(schema_line(out, "sweep")?);
    w.write_record(["T", "PR", "PR_stderr", "SwapReg", "max_alpha", "pr_slope"])?;
    for r in &res.rows {
        w.write_record([
            r.t.to_string(),
            r.pr.to_string(),
            r.pr_stderr.to_string(),
            r.swap_reg.to_string(),
            r.max_alpha.to_string(),
            opt(res.pr_slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasPoint {
    #[serde(rename = "T")]
    pub t: usize,
    /// mean over independent streams
    pub max_alpha: f64,
    pub max_alpha_stderr: f64,
    pub calibration_error: f64,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasAudit {
    pub points: Vec<BiasPoint>,
    pub slope: Option<f64>,
    /// every event at every horizon, first stream only
    pub rows: Vec<BiasRow>,
}

/// Stream seed for repetition `rep` of a bias audit; repetition 0 uses the config seed.
fn bias_seed(seed: u64, rep: usize) -> u64 {
    if rep == 0 {
        seed
    } else {
        derive_seed(seed, 0xb1a5_0000 + rep as u64)
    }
}

/// Forecast streams only; no agent is involved. `max_alpha` is averaged over
/// `repetitions` independent streams.
pub fn audit_bias(cfg: &ExperimentConfig) -> Result<BiasAudit> {
    let mut points = Vec::new();
    let mut rows = Vec::new();
    for t in cfg.horizon_list() {
        let prep = prepare(cfg, t)?;
        let streams = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let s = prep.stream(bias_seed(cfg.seed, rep))?;
                Ok((
                    s.bias.max_alpha(),
                    s.calibration_error,
                    (rep == 0).then(|| s.bias.rows()),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let alphas: Vec<f64> = streams.iter().map(|s| s.0).collect();
        let (mean, se) = mean_stderr(&alphas);
        let first = streams[0].2.clone().unwrap_or_default();
        points.push(BiasPoint {
            t,
            max_alpha: mean,
            max_alpha_stderr: se,
            calibration_error: streams.iter().map(|s| s.1).sum::<f64>() / streams.len() as f64,
            events: first.len(),
        });
        rows.extend(first);
    }
    let ts: Vec<f64> = points.iter().map(|p| p.t as f64).collect();
    let al: Vec<f64> = points.iter().map(|p| p.max_alpha).collect();
    Ok(BiasAudit {
        slope: if points.len() > 1 { loglog_slope(&ts, &al) } else { None },
        points,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundArm {
    pub first_state: String,
    pub pr: f64,
    pub pr_stderr: f64,
    pub pr_benchmark: usize,
    pub benchmark_means: Vec<f64>,
    /// max over repetitions and over realized and replay runs
    pub swap_reg_max: f64,
    pub neg_reg_min: f64,
    pub balanced_all_fraction: f64,
    pub switched_at: Vec<Option<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LowerBoundReport {
    pub schema: String,
    pub horizon: usize,
    pub repetitions: usize,
    pub arms: Vec<LowerBoundArm>,
    pub max_pr: f64,
    pub swap_reg_max: f64,
    pub neg_reg_min: f64,
}

/// Runs the adversary against the configured mechanism with the first state pinned to each
/// of the two states. Every repetition draws its own state stream.
pub fn lower_bound(cfg: &ExperimentConfig) -> Result<LowerBoundReport> {
    if cfg.agent != AgentKind::AdversaryL {
        return Err(Error::config("agent", "lower-bound runs need the adversary-L agent"));
    }
    if !matches!(cfg.states, StatesConfig::LowerBound { .. }) {
        return Err(Error::config("states.kind", "lower-bound runs need lower-bound states"));
    }
    let horizon = cfg.single_horizon();
    let (game, _) = cfg.build_game()?;
    let labels = game.states().labels().to_vec();
    let mut arms = Vec::new();
    for (arm, label) in labels.iter().enumerate() {
        let reports = (0..cfg.repetitions)
            .into_par_iter()
            .map(|rep| {
                let mut c = cfg.clone();
                c.states = StatesConfig::LowerBound {
                    first: StateRef::Index(arm),
                };
                c.repetitions = 1;
                c.seed = derive_seed(cfg.seed, 0x1b00 + (arm as u64) * 0x10000 + rep as u64);
                run_experiment(&c, Some(horizon)).map(|o| o.report)
            })
            .collect::<Result<Vec<_>>>()?;
        let nb = reports[0].benchmarks.len();
        let stats: Vec<(f64, f64)> = (0..nb)
            .map(|i| mean_stderr(&reports.iter().map(|r| r.benchmarks[i].mean).collect::<Vec<_>>()))
            .collect();
        let best = (0..nb)
            .max_by(|&a, &b| stats[a].0.total_cmp(&stats[b].0).then(b.cmp(&a)))
            .unwrap();
        let balanced = reports
            .iter()
            .filter(|r| r.agent_check.balanced_all_fraction == Some(1.0))
            .count();
        arms.push(LowerBoundArm {
            first_state: label.clone(),
            pr: stats[best].0,
            pr_stderr: stats[best].1,
            pr_benchmark: best,
            benchmark_means: stats.iter().map(|s| s.0).collect(),
            swap_reg_max: reports
                .iter()
                .map(|r| r.realized.swap_reg_max.max(r.replays.swap_reg_max))
                .fold(f64::NEG_INFINITY, f64::max),
            neg_reg_min: reports
                .iter()
                .map(|r| r.realized.neg_reg_min.min(r.replays.neg_reg_min))
                .fold(f64::INFINITY, f64::min),
            balanced_all_fraction: balanced as f64 / reports.len() as f64,
            switched_at: reports.iter().map(|r| r.agent_check.switched_at[0]).collect(),
        });
    }
    Ok(LowerBoundReport {
        schema: "lower-bound-v1".into(),
        horizon,
        repetitions: cfg.repetitions,
        max_pr: arms.iter().map(|a| a.pr).fold(f64::NEG_INFINITY, f64::max),
        swap_reg_max: arms.iter().map(|a| a.swap_reg_max).fold(f64::NEG_INFINITY, f64::max),
        neg_reg_min: arms.iter().map(|a| a.neg_reg_min).fold(f64::INFINITY, f64::min),
        arms,
    })
}

impl LowerBoundReport {
    pub fn passes(&self, min_pr: f64, max_swap: f64, min_neg: f64) -> bool {
        self.max_pr >= min_pr && self.swap_reg_max <= max_swap && self.neg_reg_min >= min_neg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyVerdict {
    pub policy: String,
    pub passes: bool,
    /// `stability`, `optimality`, `both` or `none`
    pub binding: String,
    pub cases: usize,
    /// cases where the policy was stable / optimal
    pub stable: usize,
    pub optimal: usize,
    pub max_shortfall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpossibilityGrid {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: Vec<f64>,
    pub forecasts: Vec<Vec<f64>>,
}

impl Default for ImpossibilityGrid {
    fn default() -> Self {
        let lin = |hi: f64, n: usize| (0..n).map(|i| hi * i as f64 / (n - 1) as f64).collect::<Vec<_>>();
        ImpossibilityGrid {
            c: lin(0.25, 11),
            gamma: lin(0.5, 11),
            beta: (0..=12).map(|k| 10f64.powf(-6.0 + 0.5 * k as f64)).collect(),
            eps: vec![0.0, 0.01, 0.1, 0.25, 0.5],
            forecasts: vec![vec![1.0, 0.0], vec![0.5, 0.5], vec![0.0, 1.0], vec![0.3, 0.7]],
        }
    }
}

/// Result of checking every policy at every grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub points: usize,
    /// grid points at which some policy was optimal stable
    pub witnesses: usize,
    pub policies: Vec<PolicyVerdict>,
}

pub fn check_grid(bench: &[f64], grid: &ImpossibilityGrid) -> Result<GridCheck> {
    let game = two_action_tie_game(bench.to_vec());
    let mut verdicts: Vec<PolicyVerdict> = game
        .benchmark()
        .iter()
        .map(|p| PolicyVerdict {
            policy: p.label(),
            passes: false,
            binding: String::new(),
            cases: 0,
            stable: 0,
            optimal: 0,
            max_shortfall: f64::NEG_INFINITY,
        })
        .collect();
    let mut points = 0;
    let mut witnesses = 0;
    for f in &grid.forecasts {
        let f = Forecast::new(f.clone())?;
        for &c in &grid.c {
            for &gamma in &grid.gamma {
                for &beta in &grid.beta {
                    for &eps in &grid.eps {
                        points += 1;
                        let mut any = false;
                        for (i, p) in game.benchmark().iter().enumerate() {
                            let chk = check_optimal_stable(&game, p, &f, game.benchmark(), c, eps, beta, gamma)?;
                            let v = &mut verdicts[i];
                            v.cases += 1;
                            v.stable += usize::from(chk.stable);
                            v.optimal += usize::from(chk.optimal);
                            v.max_shortfall = v.max_shortfall.max(chk.shortfall);
                            if chk.stable && chk.optimal {
                                v.passes = true;
                                any = true;
                            }
                        }
                        witnesses += usize::from(any);
                    }
                }
            }
        }
    }
    for v in &mut verdicts {
        v.binding = match (v.stable < v.cases, v.optimal < v.cases) {
            (true, true) => "both",
            (true, false) => "stability",
            (false, true) => "optimality",
            (false, false) => "none",
        }
        .into();
    }
    Ok(GridCheck {
        points,
        witnesses,
        policies: verdicts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpossibilityReport {
    pub schema: String,
    pub grid: ImpossibilityGrid,
    pub certified: bool,
    pub main: GridCheck,
    /// same grid with `gamma = 0.8`
    pub relaxed_gamma: GridCheck,
    /// benchmark `{1/2}` alone: an optimal stable policy trivially exists
    pub single_policy: GridCheck,
}

pub fn impossibility(grid: &ImpossibilityGrid) -> Result<ImpossibilityReport> {
    let main = check_grid(&[0.25, 0.5], grid)?;
    let relaxed = ImpossibilityGrid {
        gamma: vec![0.8],
        ..grid.clone()
    };
    Ok(ImpossibilityReport {
        schema: "impossibility-v1".into(),
        grid: grid.clone(),
        certified: main.witnesses == 0,
        main,
        relaxed_gamma: check_grid(&[0.25, 0.5], &relaxed)?,
        single_policy: check_grid(&[0.5], grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_is_certified() {
        let r = impossibility(&ImpossibilityGrid::default()).unwrap();
        assert!(r.certified);
        assert_eq!(r.main.policies[0].binding, "stability");
        // a half share fails optimality everywhere and stability once beta exceeds its agent gap of 1/4
        assert_eq!(r.main.policies[1].binding, "both");
        assert_eq!(r.main.policies[1].optimal, 0);
        // with gamma = 0.8 the quarter contract is stable and optimal
        assert!(r.relaxed_gamma.policies[0].passes);
        assert!(!r.relaxed_gamma.policies[1].passes);
        assert!(r.single_policy.policies[0].passes);
    }

    #[test]
    fn nonincreasing_tolerance() {
        let row = |pr: f64, se: f64| SweepRow {
            t: 1,
            pr,
            pr_stderr: se,
            swap_reg: 0.0,
            max_alpha: 0.0,
        };
        assert!(nonincreasing_within(&[row(0.2, 0.01), row(0.22, 0.01)], 2.0));
        assert!(!nonincreasing_within(&[row(0.2, 0.01), row(0.3, 0.01)], 2.0));
    }
}
