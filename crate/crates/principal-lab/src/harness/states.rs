//! State generators. None of them sees agent actions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{resolve_state, StatesConfig};
use crate::error::{Error, Result};
use crate::game::StateSpace;

#[derive(Debug, Clone, PartialEq)]
pub enum StateSource {
    Iid(Vec<f64>),
    Cycle(Vec<usize>),
    /// first state pinned, then fair over the first two states
    LowerBound(usize),
    /// picks the state the forecaster's mixture considers least likely
    AntiForecaster,
}

impl StateSource {
    pub fn from_config(cfg: &StatesConfig, space: &StateSpace) -> Result<Self> {
        let n = space.size();
        Ok(match cfg {
            StatesConfig::Iid { probs } => {
                let sum: f64 = probs.iter().sum();
                if probs.len() != n || probs.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::config(
                        "states.probs",
                        format!("need {n} nonnegative entries summing to 1"),
                    ));
                }
                StateSource::Iid(probs.clone())
            }
            StatesConfig::Sequence { values } => {
                if values.is_empty() {
                    return Err(Error::config("states.values", "empty sequence"));
                }
                let ys = values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| resolve_state(space, v, &format!("states.values[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                StateSource::Cycle(ys)
            }
            StatesConfig::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::config("states.path", format!("cannot read {}: {e}", path.display())))?;
                let mut ys = Vec::new();
                for (i, line) in text.lines().enumerate() {
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let y = match line.parse::<usize>() {
                        Ok(k) if k < n => k,
                        _ => space.index_of(line).ok_or_else(|| {
                            Error::config("states.path", format!("line {}: unknown state `{line}`", i + 1))
                        })?,
                    };
                    ys.push(y);
                }
                if ys.is_empty() {
                    return Err(Error::config("states.path", "file holds no states"));
                }
                StateSource::Cycle(ys)
            }
            StatesConfig::LowerBound { first } => {
                if n != 2 {
                    return Err(Error::config("states", "lower-bound states need exactly two states"));
                }
                StateSource::LowerBound(resolve_state(space, first, "states.first")?)
            }
            StatesConfig::AntiForecaster => StateSource::AntiForecaster,
        })
    }

    /// State for round `t` (1-based); `mean` is the forecaster's mixture mean this round.
    pub fn next(&self, t: usize, mean: &[f64], rng: &mut ChaCha8Rng) -> usize {
        match self {
            StateSource::Iid(p) => sample(p, rng),
            StateSource::Cycle(ys) => ys[(t - 1) % ys.len()],
            StateSource::LowerBound(first) => {
                if t == 1 {
                    *first
                } else {
                    usize::from(rng.gen::<bool>())
                }
            }
            StateSource::AntiForecaster => {
                let lo = mean.iter().copied().fold(f64::INFINITY, f64::min);
                mean.iter().position(|&m| m <= lo + 1e-12).unwrap_or(0)
            }
        }
    }
}

pub fn sample(p: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in p.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    p.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn anti_forecaster_picks_least_likely() {
        let s = StateSource::AntiForecaster;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.next(3, &[0.7, 0.3], &mut rng), 1);
        assert_eq!(s.next(3, &[0.5, 0.5], &mut rng), 0);
    }

    #[test]
    fn lower_bound_pins_first_state() {
        let s = StateSource::LowerBound(1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(s.next(1, &[0.5, 0.5], &mut rng), 1);
        let ms = (2..=4001).filter(|&t| s.next(t, &[], &mut rng) == 0).count();
        assert!((ms as f64 / 4000.0 - 0.5).abs() < 0.03);
    }

    #[test]
    fn cycle_repeats() {
        let s = StateSource::Cycle(vec![0, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ys: Vec<usize> = (1..=6).map(|t| s.next(t, &[], &mut rng)).collect();
        assert_eq!(ys, vec![0, 1, 1, 0, 1, 1]);
    }
}
