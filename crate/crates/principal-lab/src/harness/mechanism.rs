//! Choice rules mapping a forecast to a policy and a recommendation.

use std::sync::Arc;

use serde::Serialize;

use super::config::{resolve_entry, EventSelector, MechanismConfig, Schedule};
use crate::error::{Error, Result};
use crate::forecasting::{EventFamily, EventSet};
use crate::game::{
    optimistic_best_response, optimistic_policy, principal_best_policy, Forecast, GameKind, GameSpec, Policy,
};
use crate::oracles::{
    build_envelope, linear_stable_oracle, LinearOracleParams, PersuasionOracle, PersuasionOracleParams,
};

#[derive(Debug, Clone, PartialEq)]
pub enum ChoiceRule {
    StableLinear(LinearOracleParams),
    StablePersuasion(Box<PersuasionOracle>),
    /// `p*(pi)` over the benchmark set
    General,
    Constant {
        policy: Policy,
        recommend: Option<usize>,
    },
}

/// Everything the principal commits to in one round, plus the optimistic trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub policy: Policy,
    pub recommendation: usize,
    /// benchmark index of `p^optimistic`
    pub opt_index: usize,
    pub opt_action: usize,
    /// recommendation each constant benchmark mechanism makes under this forecast
    pub bench_recs: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismInfo {
    pub rule: String,
    pub eps: f64,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub x: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mechanism {
    game: GameSpec,
    /// fixed recommendations of the benchmark mechanisms
    bench_fixed: Vec<Option<usize>>,
    rule: ChoiceRule,
    eps: f64,
}

impl Mechanism {
    pub fn new(game: GameSpec, bench_fixed: Vec<Option<usize>>, rule: ChoiceRule, eps: f64) -> Result<Self> {
        if bench_fixed.len() != game.benchmark().len() {
            return Err(Error::domain("one fixed-recommendation slot per benchmark policy"));
        }
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::param("eps", "must be >= 0"));
        }
        match &rule {
            ChoiceRule::StableLinear(_) if game.as_linear().is_none() => {
                return Err(Error::domain("linear oracle needs a linear-contract game"))
            }
            ChoiceRule::StablePersuasion(_) if game.as_persuasion().is_none() => {
                return Err(Error::domain("persuasion oracle needs a persuasion game"))
            }
            ChoiceRule::Constant { policy, .. } => game.validate_policy(policy)?,
            _ => {}
        }
        Ok(Mechanism {
            game,
            bench_fixed,
            rule,
            eps,
        })
    }

    pub fn from_config(
        cfg: &MechanismConfig,
        game: GameSpec,
        bench_fixed: Vec<Option<usize>>,
        horizon: usize,
    ) -> Result<Self> {
        let (rule, eps) = match cfg {
            MechanismConfig::StableOracle {
                schedule,
                beta,
                delta,
                x,
            } => match game.kind() {
                GameKind::Linear(spec) => {
                    if x.is_some() {
                        return Err(Error::config("mechanism.x", "only used by the persuasion oracle"));
                    }
                    let params = match (schedule, beta, delta) {
                        (Some(Schedule::Theorem), None, None) => LinearOracleParams::schedule(horizon),
                        (None, Some(b), Some(d)) => {
                            LinearOracleParams::new(*b, *d).map_err(|e| Error::config("mechanism", e.to_string()))?
                        }
                        _ => {
                            return Err(Error::config(
                                "mechanism",
                                "give either `schedule: theorem` or both `beta` and `delta`",
                            ))
                        }
                    };
                    let eps = params.eps(spec);
                    (ChoiceRule::StableLinear(params), eps)
                }
                GameKind::Persuasion(spec) => {
                    let env = build_envelope(spec).map_err(|e| Error::config("game.persuasion", e.to_string()))?;
                    let params = match (schedule, beta) {
                        (Some(Schedule::Theorem), None) if delta.is_none() && x.is_none() => {
                            PersuasionOracleParams::schedule(horizon, &env)
                        }
                        (None, Some(b)) => match delta {
                            None => PersuasionOracleParams::from_beta(*b).map(|p| PersuasionOracleParams {
                                x: x.unwrap_or(p.x),
                                ..p
                            }),
                            Some(d) => PersuasionOracleParams::new(*b, x.unwrap_or(*b), *d),
                        },
                        _ => {
                            return Err(Error::config(
                                "mechanism",
                                "give either `schedule: theorem` alone or `beta` (with optional `x`, `delta`)",
                            ))
                        }
                    }
                    .map_err(|e| Error::config("mechanism", e.to_string()))?;
                    let oracle =
                        PersuasionOracle::new(spec, params).map_err(|e| Error::config("mechanism", e.to_string()))?;
                    let eps = params.beta * params.beta;
                    (ChoiceRule::StablePersuasion(Box::new(oracle)), eps)
                }
                GameKind::Tabular(_) => {
                    return Err(Error::config(
                        "mechanism.kind",
                        "no stable oracle exists for tabular games",
                    ))
                }
            },
            MechanismConfig::General { eps } => (ChoiceRule::General, *eps),
            MechanismConfig::Constant { policy } => {
                let (policy, recommend) = resolve_entry(&game, policy, "mechanism.policy")?;
                (ChoiceRule::Constant { policy, recommend }, 0.0)
            }
        };
        Mechanism::new(game, bench_fixed, rule, eps).map_err(|e| Error::config("mechanism", e.to_string()))
    }

    pub fn game(&self) -> &GameSpec {
        &self.game
    }

    pub fn rule(&self) -> &ChoiceRule {
        &self.rule
    }

    /// Slack of the optimistic benchmark trace.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn bench_fixed(&self) -> &[Option<usize>] {
        &self.bench_fixed
    }

    pub fn info(&self) -> MechanismInfo {
        let (rule, beta, delta, x) = match &self.rule {
            ChoiceRule::StableLinear(p) => ("stable-oracle", Some(p.beta()), Some(p.delta()), None),
            ChoiceRule::StablePersuasion(o) => (
                "stable-oracle",
                Some(o.params.beta),
                Some(o.params.delta),
                Some(o.params.x),
            ),
            ChoiceRule::General => ("general", None, None, None),
            ChoiceRule::Constant { .. } => ("constant", None, None, None),
        };
        MechanismInfo {
            rule: rule.into(),
            eps: self.eps,
            beta,
            delta,
            x,
        }
    }

    pub fn decide(&self, f: &Forecast) -> Result<Decision> {
        let g = &self.game;
        let bench = g.benchmark();
        let (opt_index, opt_action) = optimistic_policy(g, f, bench, self.eps)?;
        let (policy, fixed) = match &self.rule {
            ChoiceRule::StableLinear(params) => (Policy::Contract(linear_stable_oracle(g, f, params)?.contract), None),
            ChoiceRule::StablePersuasion(oracle) => (Policy::Scheme(oracle.decide(f.get(1))?.scheme), None),
            ChoiceRule::General => (bench[principal_best_policy(g, f, bench)?].clone(), None),
            ChoiceRule::Constant { policy, recommend } => (policy.clone(), *recommend),
        };
        let recommendation = match fixed {
            Some(r) => r,
            None => optimistic_best_response(g, &policy, f, 0.0)?,
        };
        let bench_recs = bench
            .iter()
            .zip(&self.bench_fixed)
            .map(|(p, fixed)| match fixed {
                Some(r) => Ok(*r),
                None => optimistic_best_response(g, p, f, 0.0),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Decision {
            policy,
            recommendation,
            opt_index,
            opt_action,
            bench_recs,
        })
    }
}

/// Event families the forecaster is asked to be unbiased on.
///
/// `thm2`: `(p_t, r_t)`, `(p^opt, a^opt)`, and `a*(p0, pi)` per benchmark.
/// `thm4`: `a*(p0, pi)` per benchmark and `(p*(pi), a*(p*(pi), pi))`.
pub fn build_events(selector: EventSelector, mech: &Arc<Mechanism>) -> EventSet {
    let mut set = EventSet::default();
    if selector == EventSelector::None {
        return set;
    }
    if selector == EventSelector::Thm2 {
        let m = Arc::clone(mech);
        set.push(EventFamily::new("E1", move |f| {
            let d = m.decide(f).ok()?;
            Some(format!(
                "{}|{}",
                d.policy.label(),
                m.game.action_label(d.recommendation)
            ))
        }));
        let m = Arc::clone(mech);
        set.push(EventFamily::new("E2", move |f| {
            let d = m.decide(f).ok()?;
            Some(format!("{}|{}", d.opt_index, m.game.action_label(d.opt_action)))
        }));
    }
    for (i, p0) in mech.game.benchmark().iter().enumerate() {
        let m = Arc::clone(mech);
        let p0 = p0.clone();
        set.push(EventFamily::new(format!("E3[{i}]"), move |f| {
            let a = optimistic_best_response(&m.game, &p0, f, 0.0).ok()?;
            Some(m.game.action_label(a))
        }));
    }
    if selector == EventSelector::Thm4 {
        let m = Arc::clone(mech);
        set.push(EventFamily::new("E4", move |f| {
            let bench = m.game.benchmark();
            let i = principal_best_policy(&m.game, f, bench).ok()?;
            let a = optimistic_best_response(&m.game, &bench[i], f, 0.0).ok()?;
            Some(format!("{i}|{}", m.game.action_label(a)))
        }));
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::{two_action_tie_game, work_shirk_game};

    #[test]
    fn general_rule_on_tie_game_picks_quarter() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let m = Mechanism::new(g, vec![None, None], ChoiceRule::General, 0.0).unwrap();
        for mu in [0.0, 0.3, 1.0] {
            let d = m.decide(&Forecast::binary(mu).unwrap()).unwrap();
            assert_eq!(d.policy, Policy::Contract(0.25));
            assert_eq!(d.recommendation, 1);
            assert_eq!(d.bench_recs, vec![1, 1]);
        }
    }

    #[test]
    fn stable_linear_rule_matches_oracle() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let params = LinearOracleParams::new(0.1, 0.05).unwrap();
        let m = Mechanism::new(g, vec![None, None], ChoiceRule::StableLinear(params), 0.0125).unwrap();
        let d = m.decide(&Forecast::uniform(2)).unwrap();
        assert!((d.policy.as_contract().unwrap() - 0.30).abs() < 1e-12);
        assert_eq!(d.recommendation, 1);
        assert_eq!((d.opt_index, d.opt_action), (0, 1));
    }

    #[test]
    fn fixed_recommendations_pass_through() {
        let g = work_shirk_game(vec![0.5, 0.6]);
        let m = Mechanism::new(g, vec![Some(0), Some(0)], ChoiceRule::General, 0.0).unwrap();
        let d = m.decide(&Forecast::uniform(2)).unwrap();
        // shirking is the best response to either contract at a fair forecast
        assert_eq!(d.recommendation, 1);
        assert_eq!(d.bench_recs, vec![0, 0]);
    }

    #[test]
    fn event_ids() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let m = Arc::new(Mechanism::new(g, vec![None, None], ChoiceRule::General, 0.0).unwrap());
        let f = Forecast::uniform(2);
        let thm2 = build_events(EventSelector::Thm2, &m).active(&f);
        assert_eq!(thm2, vec!["E1:0.25|a2", "E2:0|a2", "E3[0]:a2", "E3[1]:a2"]);
        let thm4 = build_events(EventSelector::Thm4, &m).active(&f);
        assert_eq!(thm4, vec!["E3[0]:a2", "E3[1]:a2", "E4:0|a2"]);
        assert!(build_events(EventSelector::None, &m).is_empty());
    }
}
