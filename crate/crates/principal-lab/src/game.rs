//! Finite principal-agent games and their best-response primitives.
//!
//! Utilities are indexed as `U(a, p, y)` and `V(a, p, y)`: agent and principal
//! payoffs for action `a` under policy `p` in state `y`. Expectations over a
//! [`Forecast`] drive every best-response computation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for every utility comparison in the crate.
pub const TIE_TOL: f64 = 1e-9;

const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSpace {
    labels: Vec<String>,
}

impl StateSpace {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::domain("state space needs at least two states"));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::domain(format!("duplicate state label `{l}`")));
            }
        }
        Ok(StateSpace { labels })
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// A distribution over states of nature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Forecast {
    probs: Vec<f64>,
}

impl Forecast {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::domain("forecast needs at least two entries"));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::domain(format!("forecast entries must lie in [0,1]: {probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::domain(format!("forecast sums to {s}, not 1")));
        }
        Ok(Forecast { probs })
    }

    pub fn point_mass(dim: usize, y: usize) -> Self {
        let mut probs = vec![0.0; dim];
        probs[y] = 1.0;
        Forecast { probs }
    }

    pub fn uniform(dim: usize) -> Self {
        Forecast {
            probs: vec![1.0 / dim as f64; dim],
        }
    }

    /// Binary forecast with mass `mu` on state 1.
    pub fn binary(mu: f64) -> Result<Self> {
        Forecast::new(vec![1.0 - mu, mu])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn dim(&self) -> usize {
        self.probs.len()
    }

    pub fn get(&self, y: usize) -> f64 {
        self.probs[y]
    }
}

/// Conditional signal distribution `p(s|y)` for a binary state.
///
/// Row `s` holds `[p(s|y=0), p(s|y=1)]`. Signals are indexed by the strategy
/// they recommend, so a scheme for a game with `n` strategies has `n` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignalScheme {
    rows: Vec<[f64; 2]>,
}

/// Weighted posteriors `(tau_i, mu_i)` induced by a scheme under a prior.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorDistribution {
    pub prior: f64,
    /// `(weight, posterior mean)`; signals with zero weight carry `None`.
    pub parts: Vec<(f64, Option<f64>)>,
}

impl PosteriorDistribution {
    /// `|sum tau_i mu_i - prior|`, the Bayes-plausibility residual.
    pub fn plausibility_residual(&self) -> f64 {
        let mean: f64 = self.parts.iter().filter_map(|(t, m)| m.map(|m| t * m)).sum();
        let mass: f64 = self.parts.iter().map(|(t, _)| t).sum();
        (mean - self.prior).abs().max((mass - 1.0).abs())
    }
}

impl SignalScheme {
    pub fn new(rows: Vec<[f64; 2]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("signal scheme needs at least one signal"));
        }
        for y in 0..2 {
            let mut s = 0.0;
            for r in &rows {
                if !(-0.0..=1.0).contains(&r[y]) || r[y].is_nan() {
                    return Err(Error::domain(format!("scheme entry {} outside [0,1]", r[y])));
                }
                s += r[y];
            }
            if (s - 1.0).abs() > 1e-9 {
                return Err(Error::domain(format!("scheme column y={y} sums to {s}")));
            }
        }
        Ok(SignalScheme { rows })
    }

    /// Every state sends signal `s` with certainty.
    pub fn uninformative(n: usize, s: usize) -> Self {
        let mut rows = vec![[0.0, 0.0]; n];
        rows[s] = [1.0, 1.0];
        SignalScheme { rows }
    }

    pub fn rows(&self) -> &[[f64; 2]] {
        &self.rows
    }

    pub fn num_signals(&self) -> usize {
        self.rows.len()
    }

    /// `p(s|y)`.
    pub fn prob(&self, s: usize, y: usize) -> f64 {
        self.rows[s][y]
    }

    pub fn posteriors(&self, mu: f64) -> PosteriorDistribution {
        let parts = self
            .rows
            .iter()
            .map(|r| {
                let tau = (1.0 - mu) * r[0] + mu * r[1];
                if tau > 0.0 {
                    (tau, Some(mu * r[1] / tau))
                } else {
                    (0.0, None)
                }
            })
            .collect();
        PosteriorDistribution { prior: mu, parts }
    }
}

/// A principal policy: a linear contract share, a signal scheme, or a table index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Contract(f64),
    Scheme(SignalScheme),
    Table(usize),
}

/// Hashable identity of a policy, equal iff the policies are bitwise equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyKey(Vec<u64>);

fn bits(x: f64) -> u64 {
    // fold -0.0 into 0.0
    if x == 0.0 {
        0
    } else {
        x.to_bits()
    }
}

impl Policy {
    pub fn key(&self) -> PolicyKey {
        match self {
            Policy::Contract(p) => PolicyKey(vec![0, bits(*p)]),
            Policy::Scheme(s) => {
                let mut v = vec![1];
                for r in s.rows() {
                    v.push(bits(r[0]));
                    v.push(bits(r[1]));
                }
                PolicyKey(v)
            }
            Policy::Table(i) => PolicyKey(vec![2, *i as u64]),
        }
    }

    /// Compact text form used in CSV output.
    pub fn label(&self) -> String {
        match self {
            Policy::Contract(p) => format!("{p}"),
            Policy::Scheme(s) => {
                let parts: Vec<String> = s.rows().iter().map(|r| format!("{}/{}", r[0], r[1])).collect();
                parts.join(";")
            }
            Policy::Table(i) => format!("#{i}"),
        }
    }

    pub fn as_contract(&self) -> Option<f64> {
        match self {
            Policy::Contract(p) => Some(*p),
            _ => None,
        }
    }
}

/// Linear contracts: the agent receives a `p` share of the realized outcome value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearContractSpec {
    pub actions: Vec<String>,
    pub outcomes: Vec<String>,
    /// value per outcome
    pub value: Vec<f64>,
    /// cost per action
    pub cost: Vec<f64>,
    /// `outcome_map[a][y]` is the outcome of action `a` in state `y`
    pub outcome_map: Vec<Vec<usize>>,
}

impl LinearContractSpec {
    /// `f(pi, a) = E_y[v(o(a, y))]`.
    pub fn expected_value(&self, a: usize, forecast: &Forecast) -> f64 {
        self.outcome_map[a]
            .iter()
            .zip(forecast.probs())
            .map(|(&o, &p)| p * self.value[o])
            .sum()
    }

    /// Smallest pairwise cost difference.
    pub fn cost_gap(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for i in 0..self.cost.len() {
            for j in 0..i {
                gap = gap.min((self.cost[i] - self.cost[j]).abs());
            }
        }
        gap
    }

    fn validate(&self, n_states: usize) -> Result<()> {
        let na = self.actions.len();
        if na == 0 {
            return Err(Error::domain("linear game needs at least one action"));
        }
        if self.cost.len() != na || self.outcome_map.len() != na {
            return Err(Error::domain("cost and outcome_map need one entry per action"));
        }
        if self.value.len() != self.outcomes.len() || self.outcomes.is_empty() {
            return Err(Error::domain("value needs one entry per outcome"));
        }
        for v in self.value.iter().chain(&self.cost) {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::domain(format!(
                    "values and costs must be finite and >= 0, got {v}"
                )));
            }
        }
        for row in &self.outcome_map {
            if row.len() != n_states || row.iter().any(|&o| o >= self.outcomes.len()) {
                return Err(Error::domain("outcome_map rows need one valid outcome per state"));
            }
        }
        if na > 1 && self.cost_gap() <= TIE_TOL {
            return Err(Error::domain("action costs must be pairwise distinct"));
        }
        Ok(())
    }
}

/// Binary-state persuasion with state-independent sender value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersuasionSpec {
    pub strategies: Vec<String>,
    /// `agent_utility[s] = [u(s, y=0), u(s, y=1)]`
    pub agent_utility: Vec<[f64; 2]>,
    pub principal_value: Vec<f64>,
}

impl PersuasionSpec {
    pub fn num_strategies(&self) -> usize {
        self.strategies.len()
    }

    /// `u(s, mu)`, linear in the posterior mean.
    pub fn utility_at(&self, s: usize, mu: f64) -> f64 {
        let [u0, u1] = self.agent_utility[s];
        u0 + (u1 - u0) * mu
    }

    /// Receiver's best strategy at `mu`, ties toward higher sender value, then lower index.
    pub fn best_strategy(&self, mu: f64) -> usize {
        let n = self.num_strategies();
        let best = (0..n).map(|s| self.utility_at(s, mu)).fold(f64::NEG_INFINITY, f64::max);
        let mut pick = usize::MAX;
        for s in 0..n {
            if self.utility_at(s, mu) >= best - TIE_TOL
                && (pick == usize::MAX || self.principal_value[s] > self.principal_value[pick] + TIE_TOL)
            {
                pick = s;
            }
        }
        pick
    }

    /// Number of signal-to-strategy maps, `n^n`.
    pub fn num_actions(&self) -> usize {
        let n = self.num_strategies();
        n.pow(n as u32)
    }

    /// Strategy chosen after signal `s` by deviation map `a`.
    pub fn map_strategy(&self, a: usize, s: usize) -> usize {
        let n = self.num_strategies();
        (a / n.pow(s as u32)) % n
    }

    /// Index of the map sending signal `s` to `strategies[s]`.
    pub fn encode_map(&self, strategies: &[usize]) -> usize {
        let n = self.num_strategies();
        strategies.iter().enumerate().map(|(s, &k)| k * n.pow(s as u32)).sum()
    }

    fn validate(&self, n_states: usize) -> Result<()> {
        if n_states != 2 {
            return Err(Error::domain("persuasion games need exactly two states"));
        }
        let n = self.strategies.len();
        if n == 0 || self.agent_utility.len() != n || self.principal_value.len() != n {
            return Err(Error::domain(
                "persuasion spec needs one utility row and value per strategy",
            ));
        }
        if n > 6 {
            return Err(Error::domain("at most 6 strategies are supported"));
        }
        for v in self.agent_utility.iter().flatten().chain(&self.principal_value) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::domain(format!(
                    "persuasion utilities must lie in [0,1], got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Explicit utility tables `u[a][p][y]`, `v[a][p][y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularSpec {
    pub actions: Vec<String>,
    pub policies: Vec<String>,
    pub u: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<Vec<f64>>>,
}

impl TabularSpec {
    fn validate(&self, n_states: usize) -> Result<()> {
        let na = self.actions.len();
        let np = self.policies.len();
        if na == 0 || np == 0 {
            return Err(Error::domain("tabular game needs actions and policies"));
        }
        for t in [&self.u, &self.v] {
            if t.len() != na || t.iter().any(|r| r.len() != np || r.iter().any(|c| c.len() != n_states)) {
                return Err(Error::domain("tabular u/v must have shape [actions][policies][states]"));
            }
            if t.iter().flatten().flatten().any(|x| !(-1.0..=1.0).contains(x)) {
                return Err(Error::domain("tabular utilities must lie in [-1,1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Linear(LinearContractSpec),
    Persuasion(PersuasionSpec),
    Tabular(TabularSpec),
}

/// A complete game: states, utilities, and the benchmark policy set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSpec {
    states: StateSpace,
    kind: GameKind,
    benchmark: Vec<Policy>,
}

/// Per-state utilities of every action under one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    n_actions: usize,
    n_states: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl PayoffTable {
    pub fn u(&self, a: usize, y: usize) -> f64 {
        self.u[a * self.n_states + y]
    }

    pub fn v(&self, a: usize, y: usize) -> f64 {
        self.v[a * self.n_states + y]
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// `U(., p, y)` for all actions.
    pub fn u_column(&self, y: usize) -> Vec<f64> {
        (0..self.n_actions).map(|a| self.u(a, y)).collect()
    }

    pub fn expected(&self, forecast: &Forecast) -> Profile {
        let mut u = vec![0.0; self.n_actions];
        let mut v = vec![0.0; self.n_actions];
        for a in 0..self.n_actions {
            for (y, &p) in forecast.probs().iter().enumerate() {
                u[a] += p * self.u(a, y);
                v[a] += p * self.v(a, y);
            }
        }
        Profile { u, v }
    }
}

/// Expected utilities of every action under one (policy, forecast).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl Profile {
    pub fn max_u(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Actions whose expected agent utility is within `eps` of the best.
    pub fn best_responses(&self, eps: f64) -> Vec<usize> {
        let cut = self.max_u() - eps - TIE_TOL;
        (0..self.u.len()).filter(|&a| self.u[a] >= cut).collect()
    }

    /// The principal-preferred member of the `eps`-best-response set.
    pub fn optimistic(&self, eps: f64) -> usize {
        let set = self.best_responses(eps);
        let best_v = set.iter().map(|&a| self.v[a]).fold(f64::NEG_INFINITY, f64::max);
        *set.iter()
            .find(|&&a| self.v[a] >= best_v - TIE_TOL)
            .expect("best-response set is never empty")
    }
}

impl GameSpec {
    pub fn new(states: StateSpace, kind: GameKind, benchmark: Vec<Policy>) -> Result<Self> {
        let n = states.size();
        match &kind {
            GameKind::Linear(l) => l.validate(n)?,
            GameKind::Persuasion(p) => p.validate(n)?,
            GameKind::Tabular(t) => t.validate(n)?,
        }
        let g = GameSpec {
            states,
            kind,
            benchmark: Vec::new(),
        };
        for p in &benchmark {
            g.validate_policy(p)?;
        }
        Ok(GameSpec { benchmark, ..g })
    }

    pub fn states(&self) -> &StateSpace {
        &self.states
    }

    pub fn n_states(&self) -> usize {
        self.states.size()
    }

    pub fn kind(&self) -> &GameKind {
        &self.kind
    }

    pub fn benchmark(&self) -> &[Policy] {
        &self.benchmark
    }

    pub fn with_benchmark(&self, benchmark: Vec<Policy>) -> Result<Self> {
        GameSpec::new(self.states.clone(), self.kind.clone(), benchmark)
    }

    pub fn as_linear(&self) -> Option<&LinearContractSpec> {
        match &self.kind {
            GameKind::Linear(l) => Some(l),
            _ => None,
        }
    }

    pub fn as_persuasion(&self) -> Option<&PersuasionSpec> {
        match &self.kind {
            GameKind::Persuasion(p) => Some(p),
            _ => None,
        }
    }

    pub fn num_actions(&self) -> usize {
        match &self.kind {
            GameKind::Linear(l) => l.actions.len(),
            GameKind::Persuasion(p) => p.num_actions(),
            GameKind::Tabular(t) => t.actions.len(),
        }
    }

    pub fn action_label(&self, a: usize) -> String {
        match &self.kind {
            GameKind::Linear(l) => l.actions[a].clone(),
            GameKind::Tabular(t) => t.actions[a].clone(),
            GameKind::Persuasion(p) => {
                let parts: Vec<&str> = (0..p.num_strategies())
                    .map(|s| p.strategies[p.map_strategy(a, s)].as_str())
                    .collect();
                parts.join(">")
            }
        }
    }

    pub fn validate_policy(&self, policy: &Policy) -> Result<()> {
        match (&self.kind, policy) {
            (GameKind::Linear(_), Policy::Contract(p)) if (0.0..=1.0).contains(p) => Ok(()),
            (GameKind::Persuasion(ps), Policy::Scheme(s)) if s.num_signals() == ps.num_strategies() => Ok(()),
            (GameKind::Tabular(t), Policy::Table(i)) if *i < t.policies.len() => Ok(()),
            _ => Err(Error::domain(format!(
                "policy {} is not valid for this game",
                policy.label()
            ))),
        }
    }

    fn check_action(&self, a: usize) -> Result<()> {
        if a >= self.num_actions() {
            return Err(Error::domain(format!("action index {a} out of range")));
        }
        Ok(())
    }

    fn check_forecast(&self, f: &Forecast) -> Result<()> {
        if f.dim() != self.n_states() {
            return Err(Error::domain(format!(
                "forecast has {} entries, game has {} states",
                f.dim(),
                self.n_states()
            )));
        }
        Ok(())
    }

    /// `(U(a,p,y), V(a,p,y))` for a single state.
    pub fn state_utilities(&self, a: usize, policy: &Policy, y: usize) -> Result<(f64, f64)> {
        self.check_action(a)?;
        self.validate_policy(policy)?;
        if y >= self.n_states() {
            return Err(Error::domain(format!("state index {y} out of range")));
        }
        Ok(self.state_utilities_unchecked(a, policy, y))
    }

    fn state_utilities_unchecked(&self, a: usize, policy: &Policy, y: usize) -> (f64, f64) {
        match (&self.kind, policy) {
            (GameKind::Linear(l), Policy::Contract(p)) => {
                let val = l.value[l.outcome_map[a][y]];
                (p * val - l.cost[a], (1.0 - p) * val)
            }
            (GameKind::Persuasion(ps), Policy::Scheme(s)) => {
                let mut u = 0.0;
                let mut v = 0.0;
                for sig in 0..s.num_signals() {
                    let w = s.prob(sig, y);
                    if w > 0.0 {
                        let k = ps.map_strategy(a, sig);
                        u += w * ps.agent_utility[k][y];
                        v += w * ps.principal_value[k];
                    }
                }
                (u, v)
            }
            (GameKind::Tabular(t), Policy::Table(i)) => (t.u[a][*i][y], t.v[a][*i][y]),
            _ => unreachable!("policy validated against game kind"),
        }
    }

    pub fn payoff_table(&self, policy: &Policy) -> Result<PayoffTable> {
        self.validate_policy(policy)?;
        let na = self.num_actions();
        let ny = self.n_states();
        let mut u = Vec::with_capacity(na * ny);
        let mut v = Vec::with_capacity(na * ny);
        for a in 0..na {
            for y in 0..ny {
                let (ua, va) = self.state_utilities_unchecked(a, policy, y);
                u.push(ua);
                v.push(va);
            }
        }
        Ok(PayoffTable {
            n_actions: na,
            n_states: ny,
            u,
            v,
        })
    }

    /// Expected utilities of all actions under `(policy, forecast)`.
    pub fn profile(&self, policy: &Policy, forecast: &Forecast) -> Result<Profile> {
        self.check_forecast(forecast)?;
        match (&self.kind, policy) {
            (GameKind::Linear(l), Policy::Contract(p)) => {
                self.validate_policy(policy)?;
                let mut u = Vec::with_capacity(l.actions.len());
                let mut v = Vec::with_capacity(l.actions.len());
                for a in 0..l.actions.len() {
                    let f = l.expected_value(a, forecast);
                    u.push(p * f - l.cost[a]);
                    v.push((1.0 - p) * f);
                }
                Ok(Profile { u, v })
            }
            _ => Ok(self.payoff_table(policy)?.expected(forecast)),
        }
    }
}

/// `(E_y U(a,p,y), E_y V(a,p,y))` under `y ~ forecast`.
pub fn expected_utilities(game: &GameSpec, action: usize, policy: &Policy, forecast: &Forecast) -> Result<(f64, f64)> {
    game.check_action(action)?;
    let prof = game.profile(policy, forecast)?;
    Ok((prof.u[action], prof.v[action]))
}

/// Actions within `eps` of the agent's best expected utility.
pub fn best_response_set(game: &GameSpec, policy: &Policy, forecast: &Forecast, eps: f64) -> Result<Vec<usize>> {
    check_eps(eps)?;
    Ok(game.profile(policy, forecast)?.best_responses(eps))
}

/// The principal-preferred `eps`-best response; lowest index among V-ties.
pub fn optimistic_best_response(game: &GameSpec, policy: &Policy, forecast: &Forecast, eps: f64) -> Result<usize> {
    check_eps(eps)?;
    Ok(game.profile(policy, forecast)?.optimistic(eps))
}

/// Index into `benchmark` of the policy maximizing `V(a*(p, pi, eps), p, pi)`.
///
/// Returns the index together with the induced optimistic action.
pub fn optimistic_policy(
    game: &GameSpec,
    forecast: &Forecast,
    benchmark: &[Policy],
    eps: f64,
) -> Result<(usize, usize)> {
    check_eps(eps)?;
    if benchmark.is_empty() {
        return Err(Error::domain("benchmark policy set is empty"));
    }
    let mut scored = Vec::with_capacity(benchmark.len());
    for p in benchmark {
        let prof = game.profile(p, forecast)?;
        let a = prof.optimistic(eps);
        scored.push((prof.v[a], a));
    }
    let best = scored.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let i = scored.iter().position(|s| s.0 >= best - TIE_TOL).unwrap();
    Ok((i, scored[i].1))
}

/// `p*(pi)`: index of the benchmark policy with the best exact-best-response value.
pub fn principal_best_policy(game: &GameSpec, forecast: &Forecast, benchmark: &[Policy]) -> Result<usize> {
    Ok(optimistic_policy(game, forecast, benchmark, 0.0)?.0)
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("eps", "must be >= 0"));
    }
    Ok(())
}

/// Small fixture games used throughout tests, examples and the CLI.
pub mod fixtures {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    /// Two actions with state-independent outcomes: `a1` (value 1, cost 1/4)
    /// and `a2` (value 2, cost 1/2). Both are indifferent at `p = 1/4`.
    pub fn two_action_tie_game(benchmark: Vec<f64>) -> GameSpec {
        let spec = LinearContractSpec {
            actions: labels(&["a1", "a2"]),
            outcomes: labels(&["low", "high"]),
            value: vec![1.0, 2.0],
            cost: vec![0.25, 0.5],
            outcome_map: vec![vec![0, 0], vec![1, 1]],
        };
        GameSpec::new(
            StateSpace::new(labels(&["s0", "s1"])).unwrap(),
            GameKind::Linear(spec),
            benchmark.into_iter().map(Policy::Contract).collect(),
        )
        .unwrap()
    }

    /// The prosecutor and judge: the judge convicts iff the posterior of guilt is at least 1/2.
    /// State 1 is `guilty`.
    pub fn prosecutor_game(benchmark: Vec<SignalScheme>) -> GameSpec {
        let spec = PersuasionSpec {
            strategies: labels(&["acquit", "convict"]),
            agent_utility: vec![[1.0, 0.0], [0.0, 1.0]],
            principal_value: vec![0.0, 1.0],
        };
        GameSpec::new(
            StateSpace::new(labels(&["innocent", "guilty"])).unwrap(),
            GameKind::Persuasion(spec),
            benchmark.into_iter().map(Policy::Scheme).collect(),
        )
        .unwrap()
    }

    /// Work/shirk game: work costs 1 and succeeds only in state `M`, paying 2 to the principal.
    pub fn work_shirk_game(benchmark: Vec<f64>) -> GameSpec {
        let spec = LinearContractSpec {
            actions: labels(&["work", "shirk"]),
            outcomes: labels(&["fail", "success"]),
            value: vec![0.0, 2.0],
            cost: vec![1.0, 0.0],
            outcome_map: vec![vec![1, 0], vec![0, 0]],
        };
        GameSpec::new(
            StateSpace::new(labels(&["M", "H"])).unwrap(),
            GameKind::Linear(spec),
            benchmark.into_iter().map(Policy::Contract).collect(),
        )
        .unwrap()
    }
}
