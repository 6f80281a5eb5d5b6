//! Phase one of a run: forecasts, states and the mechanism's decisions.
//!
//! Nothing here depends on agent behaviour, so one stream is shared by the
//! realized run, every benchmark replay and every repetition.

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::mechanism::{Decision, Mechanism};
use super::states::StateSource;
use crate::error::{Error, Result};
use crate::forecasting::{BiasLedger, Forecaster};
use crate::game::{Forecast, GameSpec, PayoffTable, Policy, PolicyKey};

/// splitmix64 finalizer, used to derive independent seeds from one config seed.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub const TAG_FORECASTER: u64 = 1;
pub const TAG_STATES: u64 = 2;
pub const TAG_AGENTS: u64 = 3;

/// Agent substream for one repetition of the realized run (`slot = 0`) or a replay (`slot = 1 + i`).
pub fn agent_rng(seed: u64, rep: usize, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_AGENTS));
    rng.set_stream(((rep as u64) << 32) | slot as u64);
    rng
}

/// Interned policies with their payoff tables.
#[derive(Debug, Clone, Default)]
pub struct PolicyBook {
    policies: Vec<Policy>,
    tables: Vec<PayoffTable>,
    index: HashMap<PolicyKey, usize>,
}

impl PolicyBook {
    pub fn intern(&mut self, game: &GameSpec, policy: &Policy) -> Result<usize> {
        let key = policy.key();
        if let Some(&i) = self.index.get(&key) {
            return Ok(i);
        }
        let table = game.payoff_table(policy)?;
        let i = self.policies.len();
        self.policies.push(policy.clone());
        self.tables.push(table);
        self.index.insert(key, i);
        Ok(i)
    }

    pub fn policy(&self, id: usize) -> &Policy {
        &self.policies[id]
    }

    pub fn table(&self, id: usize) -> &PayoffTable {
        &self.tables[id]
    }

    pub fn len(&self) -> usize {
        self.policies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.policies.is_empty()
    }
}

/// A distinct forecast with the mechanism's decision under it.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastEntry {
    pub forecast: Forecast,
    pub decision: Decision,
    pub policy_id: usize,
    pub opt_policy_id: usize,
}

#[derive(Debug, Clone)]
pub struct Stream {
    pub entries: Vec<ForecastEntry>,
    /// `(entry index, state)` per round
    pub rounds: Vec<(usize, usize)>,
    pub book: PolicyBook,
    /// policy ids of the benchmark set, in benchmark order
    pub bench_ids: Vec<usize>,
    pub bias: BiasLedger,
    pub calibration_error: f64,
}

impl Stream {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn states(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.1).collect()
    }

    pub fn forecasts(&self) -> Vec<Forecast> {
        self.rounds.iter().map(|r| self.entries[r.0].forecast.clone()).collect()
    }

    pub fn entry(&self, t: usize) -> &ForecastEntry {
        &self.entries[self.rounds[t - 1].0]
    }
}

pub fn generate_stream(
    mech: &Arc<Mechanism>,
    mut forecaster: Forecaster,
    source: &StateSource,
    horizon: usize,
    seed: u64,
) -> Result<Stream> {
    if horizon == 0 {
        return Err(Error::param("horizon", "must be >= 1"));
    }
    let game = mech.game();
    let mut book = PolicyBook::default();
    let bench_ids = game
        .benchmark()
        .iter()
        .map(|p| book.intern(game, p))
        .collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, TAG_STATES));
    let mut entries: Vec<ForecastEntry> = Vec::new();
    let mut lookup: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut rounds = Vec::with_capacity(horizon);
    let mut step = |t: usize| -> Result<(usize, usize)> {
        let draw = forecaster.propose()?;
        let key: Vec<u64> = draw.forecast.probs().iter().map(|p| p.to_bits()).collect();
        let idx = match lookup.get(&key) {
            Some(&i) => i,
            None => {
                let decision = mech.decide(&draw.forecast)?;
                let policy_id = book.intern(game, &decision.policy)?;
                let opt_policy_id = bench_ids[decision.opt_index];
                entries.push(ForecastEntry {
                    forecast: draw.forecast.clone(),
                    decision,
                    policy_id,
                    opt_policy_id,
                });
                lookup.insert(key, entries.len() - 1);
                entries.len() - 1
            }
        };
        let y = source.next(t, &draw.mean, &mut rng);
        forecaster.observe(y)?;
        Ok((idx, y))
    };
    for t in 1..=horizon {
        rounds.push(step(t).map_err(|e| e.at_round(t))?);
    }
    Ok(Stream {
        entries,
        rounds,
        bench_ids,
        calibration_error: forecaster.calibration_ledger().max_error(forecaster.grid()),
        bias: forecaster.bias_ledger().clone(),
        book,
    })
}
