//! Clairvoyant adversary that plays state-matched scripts while the principal keeps a trigger contract.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::swap::SwapLearner;
use super::{Agent, AgentSummary, RoundContext};
use crate::error::{Error, Result};

/// `sqrt(12 T ln(2 (1 + log2 T)^2))`.
pub fn balanced_threshold(horizon: usize) -> f64 {
    let t = horizon as f64;
    let l = 1.0 + t.log2();
    (12.0 * t * (2.0 * l * l).ln()).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    /// work exactly on the medium state
    AStar,
    /// work on the medium state, shirk w.p. 4/5 otherwise
    BStar,
    NoReg,
}

/// Indices the adversary needs from the work/shirk game.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdversaryLayout {
    pub work: usize,
    pub shirk: usize,
    pub medium_state: usize,
    pub trigger_medium: f64,
    pub trigger_high: f64,
}

impl Default for AdversaryLayout {
    fn default() -> Self {
        AdversaryLayout {
            work: 0,
            shirk: 1,
            medium_state: 0,
            trigger_medium: 0.5,
            trigger_high: 0.6,
        }
    }
}

pub struct Adversary {
    layout: AdversaryLayout,
    states: Vec<usize>,
    threshold: f64,
    /// running `m_M - m_H` over the first `t` states
    imbalance: Vec<i64>,
    phase: Phase,
    scripted: Phase,
    trigger: f64,
    switched_at: Option<usize>,
    noreg: SwapLearner,
}

impl Adversary {
    /// `states` is the full realized sequence `y_1..y_T`.
    pub fn new(layout: AdversaryLayout, states: Vec<usize>, n_actions: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::param("states", "adversary needs the full state sequence"));
        }
        let mut imbalance = Vec::with_capacity(states.len());
        let mut run = 0i64;
        for &y in &states {
            run += if y == layout.medium_state { 1 } else { -1 };
            imbalance.push(run);
        }
        let (scripted, trigger) = if states[0] == layout.medium_state {
            (Phase::AStar, layout.trigger_medium)
        } else {
            (Phase::BStar, layout.trigger_high)
        };
        Ok(Adversary {
            threshold: balanced_threshold(states.len()),
            layout,
            imbalance,
            phase: scripted,
            scripted,
            trigger,
            switched_at: None,
            noreg: SwapLearner::new(n_actions),
            states,
        })
    }

    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn scripted_phase(&self) -> Phase {
        self.scripted
    }

    pub fn trigger(&self) -> f64 {
        self.trigger
    }

    /// First round played by the internal learner, if any.
    pub fn switched_at(&self) -> Option<usize> {
        self.switched_at
    }

    pub fn balanced(&self, t: usize) -> bool {
        (self.imbalance[t - 1].unsigned_abs() as f64) <= self.threshold
    }

    /// Whether the balance condition holds at every round of the sequence.
    pub fn balanced_all(&self) -> bool {
        (1..=self.horizon()).all(|t| self.balanced(t))
    }

    pub fn learner(&self) -> &SwapLearner {
        &self.noreg
    }
}

impl Agent for Adversary {
    fn act(&mut self, ctx: &RoundContext, rng: &mut ChaCha8Rng) -> Result<usize> {
        let t = ctx.t;
        if t == 0 || t > self.horizon() {
            return Err(Error::domain(format!("round {t} outside 1..={}", self.horizon())));
        }
        if t == 1 {
            return Ok(self.layout.shirk);
        }
        if self.phase != Phase::NoReg {
            let on_trigger = ctx
                .policy
                .as_contract()
                .is_some_and(|p| (p - self.trigger).abs() <= 1e-9)
                && ctx.recommendation == self.layout.work;
            if !(on_trigger && self.balanced(t)) {
                self.phase = Phase::NoReg;
                self.switched_at = Some(t);
            }
        }
        let y = self.states[t - 1];
        let medium = y == self.layout.medium_state;
        Ok(match self.phase {
            Phase::AStar => {
                if medium {
                    self.layout.work
                } else {
                    self.layout.shirk
                }
            }
            Phase::BStar => {
                if medium || rng.gen::<f64>() >= 0.8 {
                    self.layout.work
                } else {
                    self.layout.shirk
                }
            }
            Phase::NoReg => self.noreg.sample((ctx.policy_id, ctx.recommendation), rng),
        })
    }

    fn observe(&mut self, ctx: &RoundContext, action: usize, y: usize) {
        // the fallback learner keeps the whole history in mind
        self.noreg
            .update((ctx.policy_id, ctx.recommendation), action, &ctx.payoffs.u_column(y));
    }

    fn summary(&self) -> AgentSummary {
        AgentSummary {
            balanced_all: Some(self.balanced_all()),
            switched_at: self.switched_at,
            max_residual: Some(self.noreg.max_residual()),
            ..AgentSummary::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::fixtures::work_shirk_game;
    use crate::game::Policy;
    use rand::SeedableRng;

    #[test]
    fn threshold_values() {
        let t = 1usize << 14;
        let want = (12.0 * t as f64 * (2.0f64 * 15.0 * 15.0).ln()).sqrt();
        assert!((balanced_threshold(t) - want).abs() < 1e-9);
        assert!(balanced_threshold(1 << 16) / 65536.0 < balanced_threshold(1 << 10) / 1024.0);
        let two = balanced_threshold(2);
        assert!(two.is_finite() && two > 0.0);
    }

    fn play(states: Vec<usize>, policy_at: impl Fn(usize) -> f64) -> (Adversary, Vec<usize>) {
        let g = work_shirk_game(vec![0.5, 0.6]);
        let mut adv = Adversary::new(AdversaryLayout::default(), states.clone(), 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut acts = Vec::new();
        for t in 1..=states.len() {
            let policy = Policy::Contract(policy_at(t));
            let table = g.payoff_table(&policy).unwrap();
            let ctx = RoundContext {
                t,
                policy_id: 0,
                recommendation: 0,
                policy: &policy,
                payoffs: &table,
            };
            let a = adv.act(&ctx, &mut rng).unwrap();
            adv.observe(&ctx, a, states[t - 1]);
            acts.push(a);
        }
        (adv, acts)
    }

    #[test]
    fn medium_start_plays_a_star() {
        let states: Vec<usize> = (0..200).map(|t| t % 2).collect();
        let (adv, acts) = play(states.clone(), |_| 0.5);
        assert_eq!(acts[0], 1);
        for t in 1..200 {
            assert_eq!(acts[t], if states[t] == 0 { 0 } else { 1 });
        }
        assert_eq!(adv.phase(), Phase::AStar);
        assert!(adv.balanced_all());
    }

    #[test]
    fn high_start_uses_point_six() {
        let states: Vec<usize> = (0..4000).map(|t| (t + 1) % 2).collect();
        let (adv, acts) = play(states.clone(), |_| 0.6);
        assert_eq!(adv.scripted_phase(), Phase::BStar);
        assert_eq!(adv.trigger(), 0.6);
        let high: Vec<usize> = (1..4000).filter(|&t| states[t] == 1).collect();
        let shirks = high.iter().filter(|&&t| acts[t] == 1).count() as f64 / high.len() as f64;
        assert!((shirks - 0.8).abs() < 0.03, "{shirks}");
        assert!((1..4000).filter(|&t| states[t] == 0).all(|t| acts[t] == 0));
    }

    #[test]
    fn deviation_switches_for_good() {
        let states: Vec<usize> = (0..50).map(|t| t % 2).collect();
        let (adv, _) = play(states, |t| if t == 7 { 0.3 } else { 0.5 });
        assert_eq!(adv.switched_at(), Some(7));
        assert_eq!(adv.phase(), Phase::NoReg);
    }

    #[test]
    fn out_of_range_round_is_an_error() {
        let g = work_shirk_game(vec![0.5]);
        let policy = Policy::Contract(0.5);
        let table = g.payoff_table(&policy).unwrap();
        let mut adv = Adversary::new(AdversaryLayout::default(), vec![0, 1], 2).unwrap();
        let ctx = RoundContext {
            t: 3,
            policy_id: 0,
            recommendation: 0,
            policy: &policy,
            payoffs: &table,
        };
        assert!(adv.act(&ctx, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
