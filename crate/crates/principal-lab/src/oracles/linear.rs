//! Stable-policy oracle for linear contracts.

use serde::Serialize;

use super::stability::{certify_profile, Verdict};
use crate::error::{Error, Result};
use crate::game::{optimistic_policy, Forecast, GameSpec, LinearContractSpec, Policy, TIE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearOracleParams {
    beta: f64,
    delta: f64,
    steps: usize,
}

impl LinearOracleParams {
    /// Grid `{0, delta, ..., floor(1/delta) delta}`; the oracle falls back to 1 beyond it.
    pub fn new(beta: f64, delta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::param("beta", "must be > 0"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::param("delta", "must lie in (0, 1]"));
        }
        let steps = (1.0 / delta + 1e-9).floor() as usize;
        Ok(LinearOracleParams { beta, delta, steps })
    }

    /// `beta = T^{-1/4}`, `delta = sqrt(beta)`.
    pub fn schedule(horizon: usize) -> Self {
        let beta = (horizon.max(1) as f64).powf(-0.25);
        LinearOracleParams::new(beta, beta.sqrt()).expect("schedule yields valid parameters")
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn grid_len(&self) -> usize {
        self.steps + 1
    }

    /// `k * delta`; computed as `k / (1/delta)` when that is an integer, so such grids are exact.
    pub fn grid_point(&self, k: usize) -> f64 {
        let inv = 1.0 / self.delta;
        if (inv - self.steps as f64).abs() <= 1e-9 {
            k as f64 / self.steps as f64
        } else {
            k as f64 * self.delta
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.grid_point(k)).collect()
    }

    /// Optimism slack `Delta_c * beta / 2`.
    pub fn eps(&self, spec: &LinearContractSpec) -> f64 {
        let gap = spec.cost_gap();
        if gap.is_finite() {
            gap * self.beta / 2.0
        } else {
            0.0
        }
    }

    /// Slack `|A| (beta + delta)` of the optimality guarantee.
    pub fn optimality_slack(&self, n_actions: usize) -> f64 {
        n_actions as f64 * (self.beta + self.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearDecision {
    pub contract: f64,
    pub p_optimistic: f64,
    /// index of `p_optimistic` in the benchmark set
    pub optimistic_index: usize,
}

fn linear_spec(game: &GameSpec) -> Result<&LinearContractSpec> {
    game.as_linear()
        .ok_or_else(|| Error::domain("linear oracle requires a linear-contract game"))
}

/// Smallest `(Delta_c beta/2, 0)`-stable grid contract at or above the optimistic benchmark, else 1.
pub fn linear_stable_oracle(
    game: &GameSpec,
    forecast: &Forecast,
    params: &LinearOracleParams,
) -> Result<LinearDecision> {
    let spec = linear_spec(game)?;
    let eps = params.eps(spec);
    let (idx, _) = optimistic_policy(game, forecast, game.benchmark(), eps)?;
    let p_opt = game.benchmark()[idx]
        .as_contract()
        .ok_or_else(|| Error::domain("benchmark must hold contracts"))?;
    let start = (0..params.grid_len())
        .find(|&k| params.grid_point(k) >= p_opt - 1e-12)
        .unwrap_or(params.grid_len());
    for k in start..params.grid_len() {
        let p = params.grid_point(k);
        let prof = game.profile(&Policy::Contract(p), forecast)?;
        let (_, verdicts) = certify_profile(&prof, eps, 0.0);
        if !verdicts.contains(&Verdict::Violated) {
            return Ok(LinearDecision {
                contract: p,
                p_optimistic: p_opt,
                optimistic_index: idx,
            });
        }
    }
    Ok(LinearDecision {
        contract: 1.0,
        p_optimistic: p_opt,
        optimistic_index: idx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TieContract {
    pub contract: f64,
    pub actions: (usize, usize),
}

/// Contracts in `[0,1]` at which two actions tie as exact best responses.
pub fn tie_contracts(game: &GameSpec, forecast: &Forecast) -> Result<Vec<TieContract>> {
    let spec = linear_spec(game)?;
    let n = spec.actions.len();
    let f: Vec<f64> = (0..n).map(|a| spec.expected_value(a, forecast)).collect();
    let mut out = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let df = f[i] - f[j];
            if df.abs() <= TIE_TOL {
                continue;
            }
            let p = (spec.cost[i] - spec.cost[j]) / df;
            if !(-TIE_TOL..=1.0 + TIE_TOL).contains(&p) {
                continue;
            }
            let p = p.clamp(0.0, 1.0);
            let br = game.profile(&Policy::Contract(p), forecast)?.best_responses(0.0);
            if br.contains(&i) && br.contains(&j) {
                out.push(TieContract {
                    contract: p,
                    actions: (i, j),
                });
            }
        }
    }
    out.sort_by(|a, b| a.contract.total_cmp(&b.contract));
    Ok(out)
}

/// Number of distinct contracts (to within 1e-9) in a tie list.
pub fn distinct_contracts(ties: &[TieContract]) -> usize {
    let mut count = 0;
    let mut last = f64::NEG_INFINITY;
    for t in ties {
        if t.contract - last > TIE_TOL {
            count += 1;
            last = t.contract;
        }
    }
    count
}

/// Whether `max f` over `B(p1, eps)` is at least `max f` over `B(p2, eps)`.
pub fn check_monotonicity(game: &GameSpec, forecast: &Forecast, p1: f64, p2: f64, eps: f64) -> Result<bool> {
    if p1 < p2 {
        return Err(Error::param("p1", "must be >= p2"));
    }
    let spec = linear_spec(game)?;
    let top = |p: f64| -> Result<f64> {
        let br = game.profile(&Policy::Contract(p), forecast)?.best_responses(eps);
        Ok(br
            .iter()
            .map(|&a| spec.expected_value(a, forecast))
            .fold(f64::NEG_INFINITY, f64::max))
    };
    Ok(top(p1)? >= top(p2)? - TIE_TOL)
}

/// The exact best response at `p` and its utility margin over every other action.
pub fn best_response_margin(game: &GameSpec, forecast: &Forecast, p: f64) -> Result<(usize, f64)> {
    let prof = game.profile(&Policy::Contract(p), forecast)?;
    let star = prof.optimistic(0.0);
    let margin = (0..prof.u.len())
        .filter(|&a| a != star)
        .map(|a| prof.u[star] - prof.u[a])
        .fold(f64::INFINITY, f64::min);
    Ok((star, margin))
}

/// Unique best response at the linearly extended contract `p` (which may lie outside [0,1]).
pub fn unique_best_response_extended(spec: &LinearContractSpec, forecast: &Forecast, p: f64) -> Option<usize> {
    let u: Vec<f64> = (0..spec.actions.len())
        .map(|a| p * spec.expected_value(a, forecast) - spec.cost[a])
        .collect();
    let best = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..u.len()).filter(|&a| u[a] >= best - TIE_TOL).collect();
    (winners.len() == 1).then(|| winners[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::two_action_tie_game;
    use crate::oracles::stability::is_stable;

    #[test]
    fn oracle_steps_past_the_tie() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let params = LinearOracleParams::new(0.1, 0.05).unwrap();
        let d = linear_stable_oracle(&g, &Forecast::uniform(2), &params).unwrap();
        assert_eq!(d.p_optimistic, 0.25);
        assert!((d.contract - 0.30).abs() < 1e-12);
        assert!(
            is_stable(&g, &Policy::Contract(d.contract), &Forecast::uniform(2), 0.0125, 0.0)
                .unwrap()
                .is_valid()
        );
    }

    #[test]
    fn falls_back_to_full_share() {
        // optimistic benchmark already at the top of the grid
        let g = two_action_tie_game(vec![1.0]);
        let params = LinearOracleParams::new(0.2, 0.5).unwrap();
        let d = linear_stable_oracle(&g, &Forecast::uniform(2), &params).unwrap();
        assert_eq!(d.contract, 1.0);
    }

    #[test]
    fn tie_at_quarter() {
        let g = two_action_tie_game(vec![0.25]);
        let ties = tie_contracts(&g, &Forecast::uniform(2)).unwrap();
        assert_eq!(ties.len(), 1);
        assert!((ties[0].contract - 0.25).abs() < 1e-12);
        assert_eq!(ties[0].actions, (0, 1));
    }

    #[test]
    fn equal_expected_value_has_no_tie() {
        use crate::game::{GameKind, StateSpace};
        let spec = LinearContractSpec {
            actions: vec!["x".into(), "y".into()],
            outcomes: vec!["o".into()],
            value: vec![0.5],
            cost: vec![0.1, 0.2],
            outcome_map: vec![vec![0, 0], vec![0, 0]],
        };
        let g = GameSpec::new(
            StateSpace::new(vec!["s".into(), "t".into()]).unwrap(),
            GameKind::Linear(spec),
            vec![],
        )
        .unwrap();
        assert!(tie_contracts(&g, &Forecast::uniform(2)).unwrap().is_empty());
    }

    #[test]
    fn monotonicity_examples() {
        let g = two_action_tie_game(vec![0.25]);
        let f = Forecast::uniform(2);
        assert!(check_monotonicity(&g, &f, 0.5, 0.25, 0.0).unwrap());
        assert!(check_monotonicity(&g, &f, 0.3, 0.3, 0.1).unwrap());
        assert!(check_monotonicity(&g, &f, 0.2, 0.3, 0.0).is_err());
    }

    #[test]
    fn schedule_grid() {
        // T = 2^16: beta = 1/16, delta = 1/4 exactly
        let p = LinearOracleParams::schedule(1 << 16);
        assert_eq!((p.beta(), p.delta()), (0.0625, 0.25));
        assert_eq!(p.grid(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        // T = 2^10: delta = 2^{-5/4}, grid stops at 2 delta
        let p = LinearOracleParams::schedule(1 << 10);
        assert!((p.delta() - 2f64.powf(-1.25)).abs() < 1e-12);
        assert_eq!(p.grid_len(), 3);
        assert!((p.grid_point(2) - 2.0 * p.delta()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LinearOracleParams::new(0.0, 0.5).is_err());
        assert!(LinearOracleParams::new(0.1, 0.0).is_err());
        assert!(LinearOracleParams::new(0.1, 1.5).is_err());
    }
}
