//! Phase two: agents play the realized mechanism and every constant benchmark on a shared stream.

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{EventSelector, ExperimentConfig, ForecasterName, MechanismConfig};
use super::mechanism::{build_events, Mechanism, MechanismInfo};
use super::metrics::{
    affine_fit, assumption_diagnostics, disagreement_diagnostic, mean_stderr, CountTable, Diagnostics,
    DisagreementBound, SecretInfoRow,
};
use super::states::StateSource;
use super::stream::{agent_rng, derive_seed, generate_stream, Stream, TAG_FORECASTER};
use crate::agents::{AdversaryLayout, AgentKind, AgentSummary, RoundContext};
use crate::error::{Error, Result};
use crate::forecasting::{BiasRow, EventSet, ForecastGrid, Forecaster, ForecasterKind};
use crate::game::{GameSpec, Policy, TIE_TOL};

/// Everything fixed by a config and a horizon.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub horizon: usize,
    pub mechanism: Arc<Mechanism>,
    pub source: StateSource,
}

pub fn prepare(cfg: &ExperimentConfig, horizon: usize) -> Result<Prepared> {
    let (game, fixed) = cfg.build_game()?;
    if cfg.agent == AgentKind::AdversaryL && (game.num_actions() != 2 || game.n_states() != 2) {
        return Err(Error::config("agent", "adversary-L needs a two-action, two-state game"));
    }
    let source = StateSource::from_config(&cfg.states, game.states())?;
    let mechanism = Arc::new(Mechanism::from_config(&cfg.mechanism, game, fixed, horizon)?);
    Ok(Prepared {
        config: cfg.clone(),
        horizon,
        mechanism,
        source,
    })
}

pub fn build_forecaster(cfg: &ExperimentConfig, game: &GameSpec, events: EventSet, seed: u64) -> Result<Forecaster> {
    let kind = match cfg.forecaster.kind {
        ForecasterName::Calibrated => ForecasterKind::Calibrated,
        ForecasterName::EventUnbiased => ForecasterKind::EventUnbiased,
        ForecasterName::Fixed => ForecasterKind::Fixed(cfg.fixed_forecast()?.unwrap()),
    };
    let grid = ForecastGrid::new(cfg.forecaster.grid, game.n_states())
        .map_err(|e| Error::config("forecaster.grid", e.to_string()))?;
    Forecaster::new(kind, grid, events, derive_seed(seed, TAG_FORECASTER))
        .map_err(|e| Error::config("forecaster", e.to_string()))
}

impl Prepared {
    pub fn game(&self) -> &GameSpec {
        self.mechanism.game()
    }

    pub fn events(&self) -> EventSet {
        build_events(self.config.forecaster.events, &self.mechanism)
    }

    /// Phase one with the given seed.
    pub fn stream(&self, seed: u64) -> Result<Stream> {
        let fc = build_forecaster(&self.config, self.game(), self.events(), seed)?;
        generate_stream(&self.mechanism, fc, &self.source, self.horizon, seed)
    }
}

/// Which mechanism the agent faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Realized,
    /// constant mechanism for benchmark index `i`
    Replay(usize),
}

impl Slot {
    fn index(self) -> usize {
        match self {
            Slot::Realized => 0,
            Slot::Replay(i) => i + 1,
        }
    }
}

/// One agent playing one mechanism over the stream.
#[derive(Debug, Clone)]
pub struct Play {
    pub actions: Vec<usize>,
    pub per_round_v: Vec<f64>,
    pub sum_u: f64,
    pub sum_v: f64,
    pub counts: CountTable,
    pub summary: AgentSummary,
}

/// `(policy id, recommendation)` for round `t` under `slot`.
pub fn context(stream: &Stream, slot: Slot, t: usize) -> (usize, usize) {
    let e = stream.entry(t);
    match slot {
        Slot::Realized => (e.policy_id, e.decision.recommendation),
        Slot::Replay(i) => (stream.bench_ids[i], e.decision.bench_recs[i]),
    }
}

pub fn play(game: &GameSpec, stream: &Stream, slot: Slot, agent: AgentKind, rep: usize, seed: u64) -> Result<Play> {
    if let Slot::Replay(i) = slot {
        if i >= stream.bench_ids.len() {
            return Err(Error::domain(format!("benchmark index {i} out of range")));
        }
    }
    let horizon = stream.horizon();
    let states = stream.states();
    let mut rng: ChaCha8Rng = agent_rng(seed, rep, slot.index());
    let mut agent = agent.build(game.num_actions(), &states, AdversaryLayout::default())?;
    let mut counts = CountTable::new(game.num_actions(), game.n_states());
    let mut actions = Vec::with_capacity(horizon);
    let mut per_round_v = Vec::with_capacity(horizon);
    let (mut sum_u, mut sum_v) = (0.0, 0.0);
    for t in 1..=horizon {
        let (pid, r) = context(stream, slot, t);
        let y = states[t - 1];
        let ctx = RoundContext {
            t,
            policy_id: pid,
            recommendation: r,
            policy: stream.book.policy(pid),
            payoffs: stream.book.table(pid),
        };
        let a = agent.act(&ctx, &mut rng).map_err(|e| e.at_round(t))?;
        if a >= game.num_actions() {
            return Err(Error::domain(format!("agent chose action {a}")).at_round(t));
        }
        agent.observe(&ctx, a, y);
        let tab = stream.book.table(pid);
        sum_u += tab.u(a, y);
        sum_v += tab.v(a, y);
        per_round_v.push(tab.v(a, y));
        actions.push(a);
        counts.record(pid, r, a, y);
    }
    Ok(Play {
        actions,
        per_round_v,
        sum_u,
        sum_v,
        counts,
        summary: agent.summary(),
    })
}

/// Fresh agent against the constant mechanism `p0`, which must belong to the benchmark set.
pub fn replay_constant(
    game: &GameSpec,
    stream: &Stream,
    p0: &Policy,
    agent: AgentKind,
    rep: usize,
    seed: u64,
) -> Result<Play> {
    let i = game
        .benchmark()
        .iter()
        .position(|p| p.key() == p0.key())
        .ok_or_else(|| Error::domain(format!("policy {} is not a benchmark policy", p0.label())))?;
    play(game, stream, Slot::Replay(i), agent, rep, seed)
}

/// Totals of the stream that do not depend on the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamTotals {
    /// `sum V(a^opt_t, p^opt_t, y_t)`
    pub optimistic: f64,
    /// `sum V(r_t, p_t, y_t)`
    pub recommended: f64,
    /// `sum V(r^{p0}_t, p0, y_t)` per benchmark
    pub bench_recommended: Vec<f64>,
}

pub fn stream_totals(stream: &Stream) -> StreamTotals {
    let nb = stream.bench_ids.len();
    let mut out = StreamTotals {
        optimistic: 0.0,
        recommended: 0.0,
        bench_recommended: vec![0.0; nb],
    };
    for &(idx, y) in &stream.rounds {
        let e = &stream.entries[idx];
        out.optimistic += stream.book.table(e.opt_policy_id).v(e.decision.opt_action, y);
        out.recommended += stream.book.table(e.policy_id).v(e.decision.recommendation, y);
        for i in 0..nb {
            out.bench_recommended[i] += stream.book.table(stream.bench_ids[i]).v(e.decision.bench_recs[i], y);
        }
    }
    out
}

/// Regret against one benchmark in one repetition, with the three-term split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplayOutcome {
    /// `(1/T) sum_t (V(a^{p0}_t, p0, y_t) - V(a_t, p_t, y_t))`, summed round by round
    pub regret: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `|(a + b + c)/T - regret|`, on the per-round scale of PR
    pub residual: f64,
    pub swap_reg: f64,
    pub neg_reg: f64,
    pub ugap: f64,
    /// `(1/T) sum (V(r^{p0}_t) - V(a^{p0}_t))`
    pub v_gap: f64,
}

#[derive(Debug, Clone)]
pub struct RepOutcome {
    pub rep: usize,
    pub realized_v: f64,
    pub diagnostics: Diagnostics,
    pub disagreement: Option<DisagreementBound>,
    pub summary: AgentSummary,
    pub replays: Vec<ReplayOutcome>,
    /// realized actions, kept for repetition 0 only
    pub actions: Option<Vec<usize>>,
}

pub fn run_rep(
    game: &GameSpec,
    stream: &Stream,
    totals: &StreamTotals,
    agent: AgentKind,
    rep: usize,
    seed: u64,
) -> Result<RepOutcome> {
    let t = stream.horizon() as f64;
    let real = play(game, stream, Slot::Realized, agent, rep, seed)?;
    let diagnostics = assumption_diagnostics(&real.counts, &stream.book);
    let disagreement = if game.num_actions() == 2 {
        disagreement_diagnostic(&real.counts, &stream.book, diagnostics.swap_reg_sum).ok()
    } else {
        None
    };
    let mut replays = Vec::with_capacity(stream.bench_ids.len());
    for i in 0..stream.bench_ids.len() {
        let rp = play(game, stream, Slot::Replay(i), agent, rep, seed)?;
        let diff: f64 = rp.per_round_v.iter().zip(&real.per_round_v).map(|(x, y)| x - y).sum();
        let a = totals.optimistic - totals.recommended;
        let b = totals.recommended - real.sum_v;
        let c = rp.sum_v - totals.optimistic;
        let d = assumption_diagnostics(&rp.counts, &stream.book);
        replays.push(ReplayOutcome {
            regret: diff / t,
            a,
            b,
            c,
            residual: ((a + b + c) / t - diff / t).abs(),
            swap_reg: d.swap_reg,
            neg_reg: d.neg_reg,
            ugap: d.ugap,
            v_gap: (totals.bench_recommended[i] - rp.sum_v) / t,
        });
    }
    Ok(RepOutcome {
        rep,
        realized_v: real.sum_v / t,
        diagnostics,
        disagreement,
        summary: real.summary,
        replays,
        actions: (rep == 0).then_some(real.actions),
    })
}

/// Repetitions `reps` on one stream, in parallel, returned in repetition order.
pub fn run_reps(game: &GameSpec, stream: &Stream, agent: AgentKind, reps: usize, seed: u64) -> Result<Vec<RepOutcome>> {
    let totals = stream_totals(stream);
    (0..reps)
        .into_par_iter()
        .map(|r| run_rep(game, stream, &totals, agent, r, seed))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkRow {
    pub index: usize,
    pub policy: String,
    pub recommend: Option<String>,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedSummary {
    pub mean_v: f64,
    pub swap_reg: f64,
    pub swap_reg_max: f64,
    pub neg_reg: f64,
    pub neg_reg_min: f64,
    pub ugap: f64,
    pub secret_info_max_u: f64,
    pub secret_info_max_v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplaySummary {
    pub swap_reg_max: f64,
    pub neg_reg_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasSummary {
    pub max_alpha: f64,
    pub calibration_error: f64,
    pub rows: Vec<BiasRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub rep: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub regret_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionSummary {
    /// benchmark attaining PR
    pub benchmark: usize,
    pub rows: Vec<DecompositionRow>,
    /// over every repetition and benchmark
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisagreementSummary {
    pub rows: Vec<DisagreementBound>,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionFit {
    /// `V-gap ~ m1 * UGap + m2` over every run; reported, never enforced
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentCheck {
    /// `max |internal swap regret - transcript swap regret|`, unnormalized
    pub swap_accounting_gap: Option<f64>,
    pub max_residual: Option<f64>,
    pub balanced_all_fraction: Option<f64>,
    pub switched_at: Vec<Option<usize>>,
}

/// Follower under the general rule: per-round PR against `3 * max alpha * |E3 and E4 events|`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FollowerCheck {
    pub pr: f64,
    pub bound: f64,
    pub events: usize,
    pub holds: bool,
}

pub const REPORT_SCHEMA: &str = "report-v1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub schema: String,
    pub name: Option<String>,
    pub horizon: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub mechanism: MechanismInfo,
    pub agent: AgentKind,
    pub forecaster: ForecasterName,
    pub events: EventSelector,
    pub distinct_forecasts: usize,
    pub distinct_policies: usize,
    pub pr: f64,
    pub pr_stderr: f64,
    pub pr_benchmark: usize,
    pub benchmarks: Vec<BenchmarkRow>,
    pub realized: RealizedSummary,
    pub replays: ReplaySummary,
    pub secret_info: Vec<SecretInfoRow>,
    pub bias: BiasSummary,
    pub decomposition: DecompositionSummary,
    pub disagreement: Option<DisagreementSummary>,
    pub assumption_fit: AssumptionFit,
    pub agent_check: AgentCheck,
    pub follower_check: Option<FollowerCheck>,
}

fn fmin(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::INFINITY, f64::min)
}

fn fmax(xs: impl Iterator<Item = f64>) -> f64 {
    xs.fold(f64::NEG_INFINITY, f64::max)
}

pub fn aggregate(prep: &Prepared, stream: &Stream, reps: &[RepOutcome], seed: u64) -> RegretReport {
    let game = prep.game();
    let nb = stream.bench_ids.len();
    let benchmarks: Vec<BenchmarkRow> = (0..nb)
        .map(|i| {
            let xs: Vec<f64> = reps.iter().map(|r| r.replays[i].regret).collect();
            let (mean, stderr) = mean_stderr(&xs);
            BenchmarkRow {
                index: i,
                policy: game.benchmark()[i].label(),
                recommend: prep.mechanism.bench_fixed()[i].map(|a| game.action_label(a)),
                mean,
                stderr,
            }
        })
        .collect();
    let best = (0..nb)
        .max_by(|&a, &b| benchmarks[a].mean.total_cmp(&benchmarks[b].mean).then(b.cmp(&a)))
        .unwrap_or(0);
    let diag = |f: fn(&Diagnostics) -> f64| reps.iter().map(move |r| f(&r.diagnostics));
    let n = reps.len() as f64;
    let realized = RealizedSummary {
        mean_v: reps.iter().map(|r| r.realized_v).sum::<f64>() / n,
        swap_reg: diag(|d| d.swap_reg).sum::<f64>() / n,
        swap_reg_max: fmax(diag(|d| d.swap_reg)),
        neg_reg: diag(|d| d.neg_reg).sum::<f64>() / n,
        neg_reg_min: fmin(diag(|d| d.neg_reg)),
        ugap: diag(|d| d.ugap).sum::<f64>() / n,
        secret_info_max_u: fmax(
            reps.iter()
                .flat_map(|r| r.diagnostics.secret_info.iter().map(|s| s.dev_u)),
        )
        .max(0.0),
        secret_info_max_v: fmax(
            reps.iter()
                .flat_map(|r| r.diagnostics.secret_info.iter().map(|s| s.dev_v)),
        )
        .max(0.0),
    };
    let all_replays = || reps.iter().flat_map(|r| r.replays.iter());
    let replays = ReplaySummary {
        swap_reg_max: fmax(all_replays().map(|o| o.swap_reg)),
        neg_reg_min: fmin(all_replays().map(|o| o.neg_reg)),
    };
    let decomposition = DecompositionSummary {
        benchmark: best,
        rows: reps
            .iter()
            .map(|r| {
                let o = &r.replays[best];
                DecompositionRow {
                    rep: r.rep,
                    a: o.a,
                    b: o.b,
                    c: o.c,
                    regret_sum: o.regret * stream.horizon() as f64,
                }
            })
            .collect(),
        max_residual: fmax(all_replays().map(|o| o.residual)).max(0.0),
    };
    let disagreement = (game.num_actions() == 2 && reps.iter().all(|r| r.disagreement.is_some())).then(|| {
        let rows: Vec<DisagreementBound> = reps.iter().map(|r| r.disagreement.unwrap()).collect();
        DisagreementSummary {
            violations: rows.iter().filter(|b| b.violated).count(),
            rows,
        }
    });
    let t = stream.horizon() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for r in reps {
        xs.push(r.diagnostics.ugap);
        ys.push(r.replays.first().map_or(0.0, |o| o.b) / t);
        for o in &r.replays {
            xs.push(o.ugap);
            ys.push(o.v_gap);
        }
    }
    let fit = affine_fit(&xs, &ys);
    let assumption_fit = AssumptionFit {
        m1: fit.map(|f| f.0),
        m2: fit.map(|f| f.1),
        points: xs.len(),
    };
    let gaps: Vec<f64> = reps
        .iter()
        .filter_map(|r| {
            r.summary
                .internal_swap_regret
                .map(|s| (s - r.diagnostics.swap_reg_sum).abs())
        })
        .collect();
    let balanced: Vec<bool> = reps.iter().filter_map(|r| r.summary.balanced_all).collect();
    let agent_check = AgentCheck {
        swap_accounting_gap: (!gaps.is_empty()).then(|| fmax(gaps.iter().copied())),
        max_residual: reps
            .iter()
            .filter_map(|r| r.summary.max_residual)
            .fold(None, |m: Option<f64>, x| Some(m.map_or(x, |m| m.max(x)))),
        balanced_all_fraction: (!balanced.is_empty())
            .then(|| balanced.iter().filter(|&&b| b).count() as f64 / balanced.len() as f64),
        switched_at: reps.iter().map(|r| r.summary.switched_at).collect(),
    };
    let pr = benchmarks.get(best).map_or(f64::NAN, |b| b.mean);
    let follower_check = (prep.config.agent == AgentKind::Follower
        && matches!(prep.config.mechanism, MechanismConfig::General { .. }))
    .then(|| {
        let rows = stream.bias.rows();
        let relevant: Vec<&BiasRow> = rows
            .iter()
            .filter(|r| r.event_id.starts_with("E3[") || r.event_id.starts_with("E4"))
            .collect();
        let max_alpha = relevant.iter().map(|r| r.alpha).fold(0.0, f64::max);
        let bound = 3.0 * max_alpha * relevant.len() as f64;
        FollowerCheck {
            pr,
            bound,
            events: relevant.len(),
            holds: pr <= bound + TIE_TOL,
        }
    });
    RegretReport {
        schema: REPORT_SCHEMA.into(),
        name: prep.config.name.clone(),
        horizon: stream.horizon(),
        repetitions: reps.len(),
        seed,
        mechanism: prep.mechanism.info(),
        agent: prep.config.agent,
        forecaster: prep.config.forecaster.kind,
        events: prep.config.forecaster.events,
        distinct_forecasts: stream.entries.len(),
        distinct_policies: stream.book.len(),
        pr,
        pr_stderr: benchmarks.get(best).map_or(f64::NAN, |b| b.stderr),
        pr_benchmark: best,
        benchmarks,
        realized,
        replays,
        secret_info: reps
            .first()
            .map(|r| r.diagnostics.secret_info.clone())
            .unwrap_or_default(),
        bias: BiasSummary {
            max_alpha: stream.bias.max_alpha(),
            calibration_error: stream.calibration_error,
            rows: stream.bias.rows(),
        },
        decomposition,
        disagreement,
        assumption_fit,
        agent_check,
        follower_check,
    }
}

/// A finished experiment: the stream, per-repetition outcomes and the report.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub prepared: Prepared,
    pub stream: Stream,
    pub reps: Vec<RepOutcome>,
    pub report: RegretReport,
}

impl Outcome {
    pub fn realized_actions(&self) -> &[usize] {
        self.reps[0].actions.as_deref().unwrap_or(&[])
    }
}

/// Runs a config at its single horizon (or `horizon` if given).
pub fn run_experiment(cfg: &ExperimentConfig, horizon: Option<usize>) -> Result<Outcome> {
    let prep = prepare(cfg, horizon.unwrap_or_else(|| cfg.single_horizon()))?;
    let stream = prep.stream(cfg.seed)?;
    let reps = run_reps(prep.game(), &stream, cfg.agent, cfg.repetitions, cfg.seed)?;
    let report = aggregate(&prep, &stream, &reps, cfg.seed);
    Ok(Outcome {
        prepared: prep,
        stream,
        reps,
        report,
    })
}
