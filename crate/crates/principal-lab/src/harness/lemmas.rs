//! Randomized property suites over the game primitives and both oracles.
//!
//! Each suite draws its own instances from a seeded generator and counts failures.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::schema_line;
use super::stream::derive_seed;
use crate::error::Result;
use crate::game::{
    best_response_set, expected_utilities, optimistic_best_response, optimistic_policy, Forecast, GameKind, GameSpec,
    LinearContractSpec, PersuasionSpec, Policy, StateSpace, TIE_TOL,
};
use crate::oracles::linear::{
    best_response_margin, check_monotonicity, distinct_contracts, unique_best_response_extended,
};
use crate::oracles::persuasion::build_envelope;
use crate::oracles::{
    concave_closure, is_stable, linear_stable_oracle, scheme_from_posteriors, stabilize_closure, tie_contracts,
    LinearOracleParams, PersuasionOracle, PersuasionOracleParams, Posterior,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaOptions {
    pub seed: u64,
    /// cases per suite, except the two oracle certifications
    pub cases: usize,
    pub linear_oracle_cases: usize,
    pub persuasion_oracle_cases: usize,
    /// Inverts every stability verdict. Only for checking that the suites can fail.
    pub flip_stability: bool,
}

impl Default for LemmaOptions {
    fn default() -> Self {
        LemmaOptions {
            seed: 7,
            cases: 1000,
            linear_oracle_cases: 10_000,
            persuasion_oracle_cases: 1000,
            flip_stability: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// first failing case, if any
    pub example: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    example: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            cases: 0,
            failures: 0,
            example: None,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.example.is_none() {
                self.example = Some(what());
            }
        }
    }

    fn done(self) -> SuiteResult {
        SuiteResult {
            name: self.name.into(),
            cases: self.cases,
            failures: self.failures,
            example: self.example,
        }
    }
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn random_forecast(rng: &mut impl Rng, dim: usize) -> Forecast {
    let w: Vec<f64> = (0..dim).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = w.iter().sum();
    let mut p: Vec<f64> = w.iter().map(|x| x / s).collect();
    // occasionally a vertex of the simplex
    if rng.gen_bool(0.1) {
        p = vec![0.0; dim];
        p[rng.gen_range(0..dim)] = 1.0;
    }
    let last = 1.0 - p[..dim - 1].iter().sum::<f64>();
    p[dim - 1] = last.max(0.0);
    Forecast::new(p).expect("normalized")
}

/// Random linear-contract game with outcome values and costs in `[0, 1]`.
pub fn random_linear_game(rng: &mut impl Rng) -> GameSpec {
    let na = rng.gen_range(2..=4);
    let ny = rng.gen_range(2..=3);
    let no = rng.gen_range(2..=4);
    // distinct costs on a coarse grid, so cost gaps are often small multiples of each other
    let mut grid: Vec<u32> = (0..=20).collect();
    grid.shuffle(rng);
    let spec = LinearContractSpec {
        actions: labels("a", na),
        outcomes: labels("o", no),
        value: (0..no).map(|_| rng.gen::<f64>()).collect(),
        cost: grid[..na].iter().map(|&c| f64::from(c) / 40.0).collect(),
        outcome_map: (0..na)
            .map(|_| (0..ny).map(|_| rng.gen_range(0..no)).collect())
            .collect(),
    };
    let nb = rng.gen_range(1..=5);
    let bench = (0..nb).map(|_| Policy::Contract(rng.gen())).collect();
    GameSpec::new(StateSpace::new(labels("y", ny)).unwrap(), GameKind::Linear(spec), bench).expect("valid game")
}

/// Random persuasion game: lines with increasing slopes meeting at sorted breakpoints, so every
/// strategy owns an interval, then rescaled to `[0, 1]`.
pub fn random_persuasion_spec(rng: &mut impl Rng) -> PersuasionSpec {
    let n = rng.gen_range(2..=4);
    let min_gap = 0.08;
    let mut z: Vec<f64>;
    loop {
        z = (0..n - 1).map(|_| rng.gen::<f64>()).collect();
        z.sort_by(f64::total_cmp);
        let mut edges = vec![0.0];
        edges.extend(&z);
        edges.push(1.0);
        if edges.windows(2).all(|w| w[1] - w[0] >= min_gap) {
            break;
        }
    }
    let mut slope = vec![rng.gen_range(-2.0..0.0)];
    for _ in 1..n {
        slope.push(slope.last().unwrap() + rng.gen_range(0.2..2.0));
    }
    let mut icpt = vec![rng.gen::<f64>()];
    for s in 1..n {
        icpt.push(icpt[s - 1] + (slope[s - 1] - slope[s]) * z[s - 1]);
    }
    let ends: Vec<[f64; 2]> = (0..n).map(|s| [icpt[s], icpt[s] + slope[s]]).collect();
    let lo = ends.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = ends.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 1.0 / (hi - lo) } else { 1.0 };
    PersuasionSpec {
        strategies: labels("s", n),
        agent_utility: ends
            .iter()
            .map(|e| [(e[0] - lo) * scale, (e[1] - lo) * scale])
            .collect(),
        principal_value: (0..n).map(|_| rng.gen()).collect(),
    }
}

fn persuasion_game(spec: PersuasionSpec) -> GameSpec {
    GameSpec::new(
        StateSpace::new(labels("y", 2)).unwrap(),
        GameKind::Persuasion(spec),
        vec![],
    )
    .expect("valid game")
}

fn suite_rng(opts: &LemmaOptions, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(opts.seed, 0x1e44a + tag))
}

fn stable(opts: &LemmaOptions, game: &GameSpec, p: &Policy, f: &Forecast, beta: f64, gamma: f64) -> Result<bool> {
    let ok = is_stable(game, p, f, beta, gamma)?.is_valid();
    Ok(ok != opts.flip_stability)
}

/// Best-response sets grow with `eps`, the optimistic response lies in the set, expected
/// utilities match a per-state sum, and non-linear games stay in `[-1, 1]`.
pub fn suite_game_core(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 0);
    let mut t = Tally::new("game-core");
    for _ in 0..opts.cases {
        let (game, policy) = if rng.gen_bool(0.5) {
            (random_linear_game(&mut rng), Policy::Contract(rng.gen()))
        } else {
            let g = persuasion_game(random_persuasion_spec(&mut rng));
            let q0: f64 = rng.gen();
            let q1: f64 = rng.gen();
            let n = g.as_persuasion().unwrap().num_strategies();
            let mut rows = vec![[0.0, 0.0]; n];
            let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
            rows[i][0] += q0;
            rows[i][1] += q1;
            rows[j][0] += 1.0 - q0;
            rows[j][1] += 1.0 - q1;
            (g, Policy::Scheme(crate::game::SignalScheme::new(rows)?))
        };
        let f = random_forecast(&mut rng, game.n_states());
        let e1: f64 = rng.gen_range(0.0..0.3);
        let e2 = e1 + rng.gen_range(0.0..0.3);
        let b1 = best_response_set(&game, &policy, &f, e1)?;
        let b2 = best_response_set(&game, &policy, &f, e2)?;
        let opt = optimistic_best_response(&game, &policy, &f, e1)?;
        let mut ok = b1.iter().all(|a| b2.contains(a)) && b1.contains(&opt);
        for a in 0..game.num_actions() {
            let (u, v) = expected_utilities(&game, a, &policy, &f)?;
            let mut bu = 0.0;
            let mut bv = 0.0;
            for y in 0..game.n_states() {
                let (uy, vy) = game.state_utilities(a, &policy, y)?;
                bu += f.get(y) * uy;
                bv += f.get(y) * vy;
            }
            ok &= (u - bu).abs() <= 1e-12 && (v - bv).abs() <= 1e-12;
            if game.as_linear().is_none() {
                ok &= (-1.0..=1.0).contains(&u) && (-1.0..=1.0).contains(&v);
            }
        }
        t.check(ok, || format!("policy {} forecast {:?}", policy.label(), f.probs()));
    }
    Ok(t.done())
}

/// At most `|A| - 1` distinct contracts in `[0, 1]` carry an exact best-response tie.
pub fn suite_ties(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 1);
    let mut t = Tally::new("ties");
    for _ in 0..opts.cases {
        let g = random_linear_game(&mut rng);
        let f = random_forecast(&mut rng, g.n_states());
        let n = distinct_contracts(&tie_contracts(&g, &f)?);
        t.check(n < g.num_actions(), || {
            format!("{n} tie contracts with {} actions", g.num_actions())
        });
    }
    Ok(t.done())
}

/// An action that is the unique best response at `p - beta` and `p + beta` leads by at least
/// `Delta_c beta` at `p`. Draws without that precondition are not counted.
pub fn suite_gap(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 2);
    let mut t = Tally::new("gap");
    let mut draws = 0;
    while t.cases < opts.cases && draws < opts.cases * 50 {
        draws += 1;
        let g = random_linear_game(&mut rng);
        let spec = g.as_linear().unwrap();
        let f = random_forecast(&mut rng, g.n_states());
        let beta = rng.gen_range(1e-3..0.2);
        let p = rng.gen_range(beta..1.0 - beta);
        let lo = unique_best_response_extended(spec, &f, p - beta);
        let hi = unique_best_response_extended(spec, &f, p + beta);
        let (Some(a), Some(b)) = (lo, hi) else { continue };
        if a != b {
            continue;
        }
        let (star, margin) = best_response_margin(&g, &f, p)?;
        let need = spec.cost_gap() * beta;
        t.check(star == a && margin >= need - TIE_TOL, || {
            format!("p={p} beta={beta} margin={margin} need={need}")
        });
    }
    Ok(t.done())
}

/// `max f` over the `eps`-best-response set does not decrease with the contract.
pub fn suite_monotonicity(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 3);
    let mut t = Tally::new("monotonicity");
    for _ in 0..opts.cases {
        let g = random_linear_game(&mut rng);
        let f = random_forecast(&mut rng, g.n_states());
        let a: f64 = rng.gen();
        let b: f64 = rng.gen();
        let (p1, p2) = (a.max(b), a.min(b));
        let eps = if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen_range(0.0..0.1)
        };
        let ok = check_monotonicity(&g, &f, p1, p2, eps)?;
        t.check(ok, || format!("p1={p1} p2={p2} eps={eps}"));
    }
    Ok(t.done())
}

/// The closure dominates the principal's value, is concave, and the stabilized closure is
/// below it by at most `3 beta / C`.
pub fn suite_closure(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 4);
    let mut t = Tally::new("closure");
    for _ in 0..opts.cases {
        let spec = random_persuasion_spec(&mut rng);
        let env = build_envelope(&spec)?;
        let cl = concave_closure(&spec, &env);
        let beta = rng.gen_range(0.0..env.c_len / 4.0);
        let st = stabilize_closure(&env, &cl, beta)?;
        let mut ok = true;
        let mut worst = String::new();
        for k in 0..=200 {
            let mu = k as f64 / 200.0;
            let v = spec.principal_value[spec.best_strategy(mu)];
            let vs = cl.value(mu);
            let vp = st.value(mu);
            if vs < v - TIE_TOL || vp > vs + TIE_TOL || vs > vp + 3.0 * beta / env.c_len + TIE_TOL {
                ok = false;
                worst = format!("mu={mu} v={v} v*={vs} v'={vp} beta={beta} C={}", env.c_len);
            }
        }
        for _ in 0..20 {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let w: f64 = rng.gen();
            let mid = cl.value(w * x + (1.0 - w) * y);
            if mid < w * cl.value(x) + (1.0 - w) * cl.value(y) - TIE_TOL {
                ok = false;
                worst = format!("concavity fails between {x} and {y}");
            }
        }
        t.check(ok, || worst);
    }
    Ok(t.done())
}

/// Linear oracle output is `(Delta_c beta/2, 0)`-stable or the full share, and within
/// `|A| (beta + delta)` of the optimistic benchmark value.
pub fn suite_linear_oracle(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 5);
    let mut t = Tally::new("linear-oracle");
    for _ in 0..opts.linear_oracle_cases {
        let g = random_linear_game(&mut rng);
        let spec = g.as_linear().unwrap();
        let f = random_forecast(&mut rng, g.n_states());
        let beta = rng.gen_range(1e-3..0.5);
        let params = LinearOracleParams::new(beta, 1.0 / rng.gen_range(1..=40) as f64)?;
        let eps = params.eps(spec);
        let d = linear_stable_oracle(&g, &f, &params)?;
        let p = Policy::Contract(d.contract);
        let st = d.contract == 1.0 || stable(opts, &g, &p, &f, eps, 0.0)?;
        let (oi, oa) = optimistic_policy(&g, &f, g.benchmark(), eps)?;
        let best = g.profile(&g.benchmark()[oi], &f)?.v[oa];
        let own = {
            let prof = g.profile(&p, &f)?;
            prof.v[prof.optimistic(0.0)]
        };
        let slack = params.optimality_slack(g.num_actions());
        let near = d.p_optimistic > 1.0 - slack || d.contract <= d.p_optimistic + slack + TIE_TOL;
        t.check(st && best - own <= slack + TIE_TOL && near, || {
            format!(
                "contract={} p_opt={} beta={beta} delta={} stable={st} gap={}",
                d.contract,
                d.p_optimistic,
                params.delta(),
                best - own
            )
        });
    }
    Ok(t.done())
}

/// Persuasion oracle output passes the brute-force stability check with
/// `(x c1 beta/2, max(x, sqrt delta))`, its split is Bayes-plausible, and discretization moves
/// posteriors by at most `2 sqrt(delta)`.
pub fn suite_persuasion_oracle(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 6);
    let mut t = Tally::new("persuasion-oracle");
    for _ in 0..opts.persuasion_oracle_cases {
        let spec = random_persuasion_spec(&mut rng);
        let env = build_envelope(&spec)?;
        let beta = rng.gen_range(0.01..env.c_len / 4.0);
        let params = PersuasionOracleParams::from_beta(beta)?;
        let oracle = PersuasionOracle::new(&spec, params)?;
        let prior: f64 = if rng.gen_bool(0.05) { 0.0 } else { rng.gen() };
        let d = oracle.decide(prior)?;
        let g = persuasion_game(spec);
        let f = Forecast::binary(prior)?;
        let p = Policy::Scheme(d.scheme.clone());
        let st = stable(opts, &g, &p, &f, params.stability_beta(&env), params.stability_gamma())?;
        let mass: f64 = d.posteriors.iter().map(|q| q.weight).sum();
        let mean: f64 = d.posteriors.iter().map(|q| q.weight * q.mean).sum();
        let plausible = (mass - 1.0).abs() <= 1e-9 && (mean - prior).abs() <= 1e-9;
        let induced = d.scheme.posteriors(prior);
        let tol = 2.0 * params.delta.sqrt();
        let close = induced.plausibility_residual() <= 1e-9
            && d.posteriors.iter().all(|q| match induced.parts[q.signal].1 {
                Some(m) => (m - q.mean).abs() <= tol + 1e-12,
                None => q.weight <= tol,
            });
        t.check(st && plausible && close, || {
            format!("prior={prior} beta={beta} stable={st} plausible={plausible} close={close}")
        });
    }
    Ok(t.done())
}

/// Bayes-plausible posteriors converted to a scheme induce the same posteriors.
pub fn suite_scheme_roundtrip(opts: &LemmaOptions) -> Result<SuiteResult> {
    let mut rng = suite_rng(opts, 7);
    let mut t = Tally::new("scheme-roundtrip");
    for _ in 0..opts.cases {
        let n = rng.gen_range(2..=4);
        let lo: f64 = rng.gen_range(0.0..0.9);
        let hi: f64 = rng.gen_range(lo + 0.05..=1.0);
        let w: f64 = rng.gen_range(0.01..0.99);
        let prior = w * lo + (1.0 - w) * hi;
        let (i, j) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if i == j {
            continue;
        }
        let posts = [
            Posterior {
                weight: w,
                mean: lo,
                signal: i,
            },
            Posterior {
                weight: 1.0 - w,
                mean: hi,
                signal: j,
            },
        ];
        let s = scheme_from_posteriors(n, prior, &posts)?;
        let back = s.posteriors(prior);
        let ok = posts.iter().all(|q| {
            let (tau, m) = back.parts[q.signal];
            (tau - q.weight).abs() <= 1e-9 && m.is_some_and(|m| (m - q.mean).abs() <= 1e-9)
        });
        t.check(ok, || format!("prior={prior} posteriors={posts:?}"));
    }
    Ok(t.done())
}

pub fn verify_all(opts: &LemmaOptions) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        suite_game_core(opts)?,
        suite_ties(opts)?,
        suite_gap(opts)?,
        suite_monotonicity(opts)?,
        suite_closure(opts)?,
        suite_linear_oracle(opts)?,
        suite_persuasion_oracle(opts)?,
        suite_scheme_roundtrip(opts)?,
    ])
}

pub fn write_lemmas_csv<W: Write>(res: &[SuiteResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(schema_line(out, "lemmas")?);
    w.write_record(["suite", "cases", "failures", "passed", "example"])?;
    for s in res {
        w.write_record([
            s.name.clone(),
            s.cases.to_string(),
            s.failures.to_string(),
            s.passed().to_string(),
            s.example.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LemmaOptions {
        LemmaOptions {
            cases: 200,
            linear_oracle_cases: 300,
            persuasion_oracle_cases: 100,
            ..LemmaOptions::default()
        }
    }

    #[test]
    fn suites_pass_on_small_budget() {
        for s in verify_all(&small()).unwrap() {
            assert!(s.passed(), "{}: {:?}", s.name, s.example);
        }
    }

    #[test]
    fn flipped_stability_is_caught() {
        let opts = LemmaOptions {
            flip_stability: true,
            ..small()
        };
        let res = verify_all(&opts).unwrap();
        let by = |n: &str| res.iter().find(|s| s.name == n).unwrap().passed();
        assert!(!by("linear-oracle"));
        assert!(!by("persuasion-oracle"));
    }

    #[test]
    fn persuasion_generator_gives_full_envelopes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let spec = random_persuasion_spec(&mut rng);
            let env = build_envelope(&spec).unwrap();
            assert_eq!(env.pieces.len(), spec.num_strategies());
            assert!(spec.agent_utility.iter().flatten().all(|u| (0.0..=1.0).contains(u)));
        }
    }
}
