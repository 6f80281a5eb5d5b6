use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{Forecast, GameSpec, Policy, Profile, TIE_TOL};

/// How one competing action was cleared, or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The optimistic best response itself.
    Reference,
    /// The agent loses at least `beta` by switching to it.
    AgentGap,
    /// The principal loses at most `gamma` if the agent switches to it.
    PrincipalGap,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityCertificate {
    pub policy: Policy,
    pub reference_action: usize,
    pub verdicts: Vec<Verdict>,
    pub beta: f64,
    pub gamma: f64,
}

impl StabilityCertificate {
    pub fn is_valid(&self) -> bool {
        !self.verdicts.contains(&Verdict::Violated)
    }

    pub fn violations(&self) -> Vec<usize> {
        (0..self.verdicts.len())
            .filter(|&a| self.verdicts[a] == Verdict::Violated)
            .collect()
    }
}

/// Checks the two stability disjuncts on a precomputed profile.
pub fn certify_profile(prof: &Profile, beta: f64, gamma: f64) -> (usize, Vec<Verdict>) {
    let star = prof.optimistic(0.0);
    let verdicts = (0..prof.u.len())
        .map(|a| {
            if a == star {
                Verdict::Reference
            } else if prof.u[a] <= prof.u[star] - beta + TIE_TOL {
                Verdict::AgentGap
            } else if prof.v[a] >= prof.v[star] - gamma - TIE_TOL {
                Verdict::PrincipalGap
            } else {
                Verdict::Violated
            }
        })
        .collect();
    (star, verdicts)
}

/// `(beta, gamma)`-stability of `policy` under `forecast`.
pub fn is_stable(
    game: &GameSpec,
    policy: &Policy,
    forecast: &Forecast,
    beta: f64,
    gamma: f64,
) -> Result<StabilityCertificate> {
    if beta.is_nan() || gamma.is_nan() || beta < 0.0 || gamma < 0.0 {
        return Err(Error::param("beta/gamma", "must be >= 0"));
    }
    let prof = game.profile(policy, forecast)?;
    let (star, verdicts) = certify_profile(&prof, beta, gamma);
    Ok(StabilityCertificate {
        policy: policy.clone(),
        reference_action: star,
        verdicts,
        beta,
        gamma,
    })
}

/// Result of checking the full optimal-stable definition for one policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalStableCheck {
    pub stable: bool,
    /// `max_{p0} V(a*(p0, pi, eps), p0, pi) - V(a*(p, pi), p, pi)`; optimal iff `<= c`.
    pub shortfall: f64,
    pub optimal: bool,
}

/// Whether `policy` is `(c, eps, beta, gamma)`-optimal stable against `benchmark`.
pub fn check_optimal_stable(
    game: &GameSpec,
    policy: &Policy,
    forecast: &Forecast,
    benchmark: &[Policy],
    c: f64,
    eps: f64,
    beta: f64,
    gamma: f64,
) -> Result<OptimalStableCheck> {
    let cert = is_stable(game, policy, forecast, beta, gamma)?;
    let prof = game.profile(policy, forecast)?;
    let own = prof.v[prof.optimistic(0.0)];
    let mut best = f64::NEG_INFINITY;
    for p0 in benchmark {
        let pr = game.profile(p0, forecast)?;
        best = best.max(pr.v[pr.optimistic(eps)]);
    }
    let shortfall = best - own;
    Ok(OptimalStableCheck {
        stable: cert.is_valid(),
        shortfall,
        optimal: shortfall <= c + TIE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::two_action_tie_game;

    #[test]
    fn quarter_is_unstable() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let f = Forecast::uniform(2);
        for gamma in [0.0, 0.25, 0.5] {
            let c = is_stable(&g, &Policy::Contract(0.25), &f, 0.01, gamma).unwrap();
            assert!(!c.is_valid());
            assert_eq!(c.violations(), vec![0]);
        }
        // V-gap is exactly 3/4
        assert!(is_stable(&g, &Policy::Contract(0.25), &f, 0.01, 0.75)
            .unwrap()
            .is_valid());
    }

    #[test]
    fn point_three_is_stable_by_agent_gap() {
        let g = two_action_tie_game(vec![0.25, 0.5]);
        let c = is_stable(&g, &Policy::Contract(0.30), &Forecast::uniform(2), 0.0125, 0.0).unwrap();
        assert!(c.is_valid());
        assert_eq!(c.verdicts, vec![Verdict::AgentGap, Verdict::Reference]);
    }

    #[test]
    fn full_share_is_always_stable() {
        let g = two_action_tie_game(vec![0.25]);
        for beta in [0.0, 0.3, 1.0] {
            let c = is_stable(&g, &Policy::Contract(1.0), &Forecast::uniform(2), beta, 0.0).unwrap();
            assert!(c.is_valid());
        }
    }

    #[test]
    fn negative_parameters_rejected() {
        let g = two_action_tie_game(vec![0.25]);
        assert!(is_stable(&g, &Policy::Contract(0.5), &Forecast::uniform(2), -0.1, 0.0).is_err());
    }
}
