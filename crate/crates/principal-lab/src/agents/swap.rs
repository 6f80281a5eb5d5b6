//! Per-context Blum–Mansour swap-regret learner over multiplicative-weights sub-learners.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentSummary, RoundContext};
use crate::error::Result;

const POWER_ITERS: usize = 500;
const POWER_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;

/// `(policy id, recommendation)`.
pub type ContextKey = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct ContextState {
    /// `cum[i][a]`: loss of action `a` accumulated by sub-learner `i`
    cum: Vec<Vec<f64>>,
    q: Vec<f64>,
    rounds: u64,
    /// `expected[a][b] = sum_t q_t(a) (U(b) - U(a))`
    expected: Vec<Vec<f64>>,
    /// `realized[a][b] = sum_{t: a_t = a} (U(b) - U(a))`
    realized: Vec<Vec<f64>>,
}

impl ContextState {
    fn new(n: usize) -> Self {
        ContextState {
            cum: vec![vec![0.0; n]; n],
            q: vec![1.0 / n as f64; n],
            rounds: 0,
            expected: vec![vec![0.0; n]; n],
            realized: vec![vec![0.0; n]; n],
        }
    }

    pub fn mixture(&self) -> &[f64] {
        &self.q
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    /// Learning rate for the current doubling epoch.
    fn eta(&self, n: usize) -> f64 {
        let epoch = (self.rounds.max(1)).next_power_of_two() as f64;
        ((n as f64).ln() / epoch).sqrt()
    }

    fn row_matrix(&self, n: usize) -> Vec<Vec<f64>> {
        let eta = self.eta(n);
        self.cum
            .iter()
            .map(|c| {
                let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
                let w: Vec<f64> = c.iter().map(|x| (-eta * (x - lo)).exp()).collect();
                let s: f64 = w.iter().sum();
                w.into_iter().map(|x| x / s).collect()
            })
            .collect()
    }

    /// Recomputes `q = q Q`; returns the fixed-point residual.
    fn refresh(&mut self, n: usize) -> f64 {
        let rows = self.row_matrix(n);
        let step = |q: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                for j in 0..n {
                    out[j] += q[i] * rows[i][j];
                }
            }
            out
        };
        let mut q = self.q.clone();
        for _ in 0..POWER_ITERS {
            let next = step(&q);
            let diff: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
            q = next;
            if diff < POWER_TOL {
                break;
            }
        }
        let mut residual: f64 = step(&q).iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
        if residual > RESIDUAL_TOL {
            // solve (Q^T - I) q = 0 with sum(q) = 1
            let mut m = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    m[(j, i)] = rows[i][j] - if i == j { 1.0 } else { 0.0 };
                }
            }
            let mut rhs = DVector::<f64>::zeros(n);
            for j in 0..n {
                m[(n - 1, j)] = 1.0;
            }
            rhs[n - 1] = 1.0;
            if let Some(sol) = m.lu().solve(&rhs) {
                let mut s: Vec<f64> = sol.iter().map(|x| x.max(0.0)).collect();
                let tot: f64 = s.iter().sum();
                s.iter_mut().for_each(|x| *x /= tot);
                let r: f64 = step(&s).iter().zip(&s).map(|(a, b)| (a - b).abs()).sum();
                if r < residual {
                    q = s;
                    residual = r;
                }
            }
        }
        self.q = q;
        residual
    }

    fn update(&mut self, n: usize, action: usize, u: &[f64]) -> f64 {
        for a in 0..n {
            for b in 0..n {
                self.expected[a][b] += self.q[a] * (u[b] - u[a]);
            }
        }
        for b in 0..n {
            self.realized[action][b] += u[b] - u[action];
        }
        for i in 0..n {
            for a in 0..n {
                self.cum[i][a] -= self.q[i] * u[a];
            }
        }
        self.rounds += 1;
        self.refresh(n)
    }
}

/// No-contextual-swap-regret learner keyed on `(policy, recommendation)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapLearner {
    n: usize,
    contexts: BTreeMap<ContextKey, ContextState>,
    max_residual: f64,
}

impl SwapLearner {
    pub fn new(n_actions: usize) -> Self {
        SwapLearner {
            n: n_actions,
            contexts: BTreeMap::new(),
            max_residual: 0.0,
        }
    }

    pub fn context(&self, key: ContextKey) -> Option<&ContextState> {
        self.contexts.get(&key)
    }

    /// Current mixture for a context (uniform if unseen).
    pub fn mixture(&self, key: ContextKey) -> Vec<f64> {
        self.contexts
            .get(&key)
            .map_or_else(|| vec![1.0 / self.n as f64; self.n], |c| c.q.clone())
    }

    pub fn sample(&self, key: ContextKey, rng: &mut ChaCha8Rng) -> usize {
        let q = self.mixture(key);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (a, p) in q.iter().enumerate() {
            acc += p;
            if u < acc {
                return a;
            }
        }
        self.n - 1
    }

    /// Full-information update with the realized per-action utilities.
    pub fn update(&mut self, key: ContextKey, action: usize, utilities: &[f64]) {
        let n = self.n;
        let st = self.contexts.entry(key).or_insert_with(|| ContextState::new(n));
        let r = st.update(n, action, utilities);
        self.max_residual = self.max_residual.max(r);
    }

    /// Largest stationary-mixture residual seen so far.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    fn swap_sum(&self, pick: impl Fn(&ContextState) -> &Vec<Vec<f64>>) -> f64 {
        self.contexts
            .values()
            .map(|c| {
                pick(c)
                    .iter()
                    .map(|row| row.iter().copied().fold(0.0, f64::max))
                    .sum::<f64>()
            })
            .sum()
    }

    /// Unnormalized swap regret of the realized actions.
    pub fn realized_swap_regret(&self) -> f64 {
        self.swap_sum(|c| &c.realized)
    }

    /// Unnormalized swap regret of the played mixtures.
    pub fn expected_swap_regret(&self) -> f64 {
        self.swap_sum(|c| &c.expected)
    }
}

impl Agent for SwapLearner {
    fn act(&mut self, ctx: &RoundContext, rng: &mut ChaCha8Rng) -> Result<usize> {
        Ok(self.sample((ctx.policy_id, ctx.recommendation), rng))
    }

    fn observe(&mut self, ctx: &RoundContext, action: usize, y: usize) {
        let u = ctx.payoffs.u_column(y);
        self.update((ctx.policy_id, ctx.recommendation), action, &u);
    }

    fn summary(&self) -> AgentSummary {
        AgentSummary {
            internal_swap_regret: Some(self.realized_swap_regret()),
            max_residual: Some(self.max_residual),
            ..AgentSummary::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn fresh_context_is_uniform() {
        let l = SwapLearner::new(3);
        assert_eq!(l.mixture((0, 0)), vec![1.0 / 3.0; 3]);
    }

    #[test]
    fn concentrates_on_best_action() {
        let mut l = SwapLearner::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let a = l.sample((0, 0), &mut rng);
            l.update((0, 0), a, &[0.0, 1.0]);
        }
        assert!(l.mixture((0, 0))[1] >= 0.95);
        assert!(l.max_residual() <= 1e-8);
    }

    #[test]
    fn flat_utilities_keep_uniform() {
        let mut l = SwapLearner::new(4);
        for _ in 0..50 {
            l.update((1, 2), 0, &[0.3; 4]);
        }
        for p in l.mixture((1, 2)) {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn adversarial_flips_have_small_swap_regret() {
        let t = 1 << 14;
        let mut l = SwapLearner::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..t {
            let q = l.mixture((0, 0));
            // reward the action the learner currently favours less
            let u = if q[0] >= q[1] { [0.0, 1.0] } else { [1.0, 0.0] };
            let a = l.sample((0, 0), &mut rng);
            l.update((0, 0), a, &u);
        }
        let bound = 3.0 * ((2f64).ln() * 2.0 / t as f64).sqrt();
        assert!(l.expected_swap_regret() / (t as f64) <= bound);
    }

    #[test]
    fn contexts_are_independent() {
        let mut l = SwapLearner::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for s in 0..4000 {
            let key = (s % 2, 0);
            let u = if s % 2 == 0 { [1.0, 0.0] } else { [0.0, 1.0] };
            let a = l.sample(key, &mut rng);
            l.update(key, a, &u);
        }
        assert!(l.mixture((0, 0))[0] > 0.95);
        assert!(l.mixture((1, 0))[1] > 0.95);
        let per_ctx = l.expected_swap_regret() / 2000.0;
        assert!(per_ctx < 0.1);
    }
}
