//! Agent learning algorithms.

pub mod adversary;
pub mod swap;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{PayoffTable, Policy};

pub use adversary::{balanced_threshold, Adversary, AdversaryLayout, Phase};
pub use swap::{ContextKey, SwapLearner};

/// What the agent sees when choosing an action in round `t` (1-based).
pub struct RoundContext<'a> {
    pub t: usize,
    pub policy_id: usize,
    pub recommendation: usize,
    pub policy: &'a Policy,
    pub payoffs: &'a PayoffTable,
}

pub trait Agent: Send {
    fn act(&mut self, ctx: &RoundContext, rng: &mut ChaCha8Rng) -> Result<usize>;

    /// Called once the state is revealed.
    fn observe(&mut self, ctx: &RoundContext, action: usize, y: usize);

    fn summary(&self) -> AgentSummary {
        AgentSummary::default()
    }
}

/// Internal bookkeeping exposed for cross-checks against the transcript.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct AgentSummary {
    /// unnormalized swap regret of realized actions as tracked by the learner
    pub internal_swap_regret: Option<f64>,
    pub max_residual: Option<f64>,
    pub balanced_all: Option<bool>,
    pub switched_at: Option<usize>,
}

/// Always plays the recommendation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Follower;

pub fn follower_act(recommendation: usize) -> usize {
    recommendation
}

impl Agent for Follower {
    fn act(&mut self, ctx: &RoundContext, _rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(follower_act(ctx.recommendation))
    }

    fn observe(&mut self, _ctx: &RoundContext, _action: usize, _y: usize) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AgentKind {
    Follower,
    Swap,
    #[serde(rename = "adversary-L")]
    AdversaryL,
}

impl AgentKind {
    /// A fresh agent. The adversary needs the full state sequence.
    pub fn build(self, n_actions: usize, states: &[usize], layout: AdversaryLayout) -> Result<Box<dyn Agent>> {
        Ok(match self {
            AgentKind::Follower => Box::new(Follower),
            AgentKind::Swap => Box::new(SwapLearner::new(n_actions)),
            AgentKind::AdversaryL => Box::new(Adversary::new(layout, states.to_vec(), n_actions)?),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::two_action_tie_game;
    use rand::SeedableRng;

    #[test]
    fn follower_returns_recommendation() {
        let g = two_action_tie_game(vec![0.25]);
        let p = Policy::Contract(0.25);
        let table = g.payoff_table(&p).unwrap();
        let ctx = RoundContext {
            t: 1,
            policy_id: 0,
            recommendation: 1,
            policy: &p,
            payoffs: &table,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(Follower.act(&ctx, &mut rng).unwrap(), 1);
    }

    #[test]
    fn kind_names() {
        let k: AgentKind = serde_json::from_str("\"adversary-L\"").unwrap();
        assert_eq!(k, AgentKind::AdversaryL);
        let k: AgentKind = serde_json::from_str("\"swap\"").unwrap();
        assert_eq!(k, AgentKind::Swap);
    }
}
