//! Experiment configuration documents (JSON).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::AgentKind;
use crate::error::{Error, Result};
use crate::game::{
    fixtures, Forecast, GameKind, GameSpec, LinearContractSpec, PersuasionSpec, Policy, SignalScheme, StateSpace,
    TabularSpec,
};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub game: GameConfig,
    pub mechanism: MechanismConfig,
    pub forecaster: ForecasterConfig,
    pub agent: AgentKind,
    pub states: StatesConfig,
    #[serde(default)]
    pub horizon: Option<usize>,
    /// used by `sweep` and `audit-bias`
    #[serde(default)]
    pub horizons: Option<Vec<usize>>,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_reps() -> usize {
    32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fixture {
    TwoActionTie,
    Prosecutor,
    WorkShirk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolicyValue {
    Number(f64),
    Rows(Vec<[f64; 2]>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BenchmarkEntry {
    Plain(PolicyValue),
    WithRecommendation { policy: PolicyValue, recommend: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(default)]
    pub states: Option<Vec<String>>,
    #[serde(default)]
    pub fixture: Option<Fixture>,
    #[serde(default)]
    pub linear: Option<LinearContractSpec>,
    #[serde(default)]
    pub persuasion: Option<PersuasionSpec>,
    #[serde(default)]
    pub tabular: Option<TabularSpec>,
    #[serde(default)]
    pub benchmark: Vec<BenchmarkEntry>,
    /// adds `{0, 1/k, ..., 1}` contracts, or every two-signal scheme on that grid
    #[serde(default)]
    pub benchmark_grid: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MechanismConfig {
    StableOracle {
        #[serde(default)]
        schedule: Option<Schedule>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        x: Option<f64>,
    },
    General {
        #[serde(default)]
        eps: f64,
    },
    Constant {
        policy: BenchmarkEntry,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForecasterName {
    Calibrated,
    EventUnbiased,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventSelector {
    Thm2,
    Thm4,
    #[default]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForecasterConfig {
    pub kind: ForecasterName,
    #[serde(default)]
    pub forecast: Option<Vec<f64>>,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub events: EventSelector,
}

fn default_grid() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRef {
    Index(usize),
    Label(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StatesConfig {
    Iid {
        probs: Vec<f64>,
    },
    /// repeated cyclically
    Sequence {
        values: Vec<StateRef>,
    },
    /// one label or index per line, repeated cyclically
    File {
        path: PathBuf,
    },
    /// first state pinned, the rest fair coin flips
    LowerBound {
        first: StateRef,
    },
    AntiForecaster,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(
                if path.is_empty() { ".".into() } else { path },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config; relative `file` state paths resolve against the config's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let StatesConfig::File { path: p } = &mut cfg.states {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::config(
                "version",
                format!("expected {CONFIG_VERSION}, got {}", self.version),
            ));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions", "must be >= 1"));
        }
        if self.horizon == Some(0) {
            return Err(Error::config("horizon", "must be >= 1"));
        }
        if let Some(hs) = &self.horizons {
            if hs.is_empty() || hs.contains(&0) {
                return Err(Error::config(
                    "horizons",
                    "must be a nonempty list of positive integers",
                ));
            }
        }
        if self.horizon.is_none() && self.horizons.is_none() {
            return Err(Error::config("horizon", "either `horizon` or `horizons` is required"));
        }
        if self.forecaster.grid == 0 {
            return Err(Error::config("forecaster.grid", "must be >= 1"));
        }
        match (self.forecaster.kind, &self.forecaster.forecast) {
            (ForecasterName::Fixed, None) => {
                return Err(Error::config("forecaster.forecast", "required for a fixed forecaster"))
            }
            (ForecasterName::Calibrated | ForecasterName::EventUnbiased, Some(_)) => {
                return Err(Error::config(
                    "forecaster.forecast",
                    "only allowed for a fixed forecaster",
                ))
            }
            _ => {}
        }
        self.build_game()?;
        Ok(())
    }

    /// Horizon for single runs: `horizon`, else the first of `horizons`.
    pub fn single_horizon(&self) -> usize {
        self.horizon
            .or_else(|| self.horizons.as_ref().map(|h| h[0]))
            .unwrap_or(1)
    }

    pub fn horizon_list(&self) -> Vec<usize> {
        self.horizons.clone().unwrap_or_else(|| vec![self.single_horizon()])
    }

    /// The game with its benchmark set; fixed recommendations are returned alongside.
    pub fn build_game(&self) -> Result<(GameSpec, Vec<Option<usize>>)> {
        let g = &self.game;
        let given = [
            g.fixture.is_some(),
            g.linear.is_some(),
            g.persuasion.is_some(),
            g.tabular.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if given != 1 {
            return Err(Error::config(
                "game",
                "exactly one of `fixture`, `linear`, `persuasion`, `tabular` is required",
            ));
        }
        let bare = if let Some(f) = g.fixture {
            if g.states.is_some() {
                return Err(Error::config("game.states", "fixtures define their own states"));
            }
            match f {
                Fixture::TwoActionTie => fixtures::two_action_tie_game(vec![]),
                Fixture::Prosecutor => fixtures::prosecutor_game(vec![]),
                Fixture::WorkShirk => fixtures::work_shirk_game(vec![]),
            }
        } else {
            let labels = g
                .states
                .clone()
                .ok_or_else(|| Error::config("game.states", "required unless a fixture is used"))?;
            let states = StateSpace::new(labels).map_err(|e| Error::config("game.states", e.to_string()))?;
            let kind = if let Some(l) = &g.linear {
                GameKind::Linear(l.clone())
            } else if let Some(p) = &g.persuasion {
                GameKind::Persuasion(p.clone())
            } else {
                GameKind::Tabular(g.tabular.clone().unwrap())
            };
            GameSpec::new(states, kind, vec![]).map_err(|e| Error::config("game", e.to_string()))?
        };
        let mut policies = Vec::new();
        let mut recs = Vec::new();
        for (i, entry) in g.benchmark.iter().enumerate() {
            let field = format!("game.benchmark[{i}]");
            let (p, r) = resolve_entry(&bare, entry, &field)?;
            policies.push(p);
            recs.push(r);
        }
        if let Some(k) = g.benchmark_grid {
            if k == 0 {
                return Err(Error::config("game.benchmark_grid", "must be >= 1"));
            }
            for p in grid_policies(&bare, k)? {
                if !policies.contains(&p) {
                    policies.push(p);
                    recs.push(None);
                }
            }
        }
        if policies.is_empty() {
            return Err(Error::config("game.benchmark", "benchmark set is empty"));
        }
        let game = bare
            .with_benchmark(policies)
            .map_err(|e| Error::config("game.benchmark", e.to_string()))?;
        Ok((game, recs))
    }

    pub fn fixed_forecast(&self) -> Result<Option<Forecast>> {
        match &self.forecaster.forecast {
            None => Ok(None),
            Some(v) => Forecast::new(v.clone())
                .map(Some)
                .map_err(|e| Error::config("forecaster.forecast", e.to_string())),
        }
    }
}

pub fn resolve_entry(game: &GameSpec, entry: &BenchmarkEntry, field: &str) -> Result<(Policy, Option<usize>)> {
    let (value, rec) = match entry {
        BenchmarkEntry::Plain(v) => (v, None),
        BenchmarkEntry::WithRecommendation { policy, recommend } => (policy, Some(recommend)),
    };
    let policy = match (game.kind(), value) {
        (GameKind::Linear(_), PolicyValue::Number(p)) => Policy::Contract(*p),
        (GameKind::Tabular(_), PolicyValue::Number(i)) if i.fract() == 0.0 && *i >= 0.0 => Policy::Table(*i as usize),
        (GameKind::Persuasion(_), PolicyValue::Rows(rows)) => {
            Policy::Scheme(SignalScheme::new(rows.clone()).map_err(|e| Error::config(field, e.to_string()))?)
        }
        _ => return Err(Error::config(field, "policy value does not match the game kind")),
    };
    game.validate_policy(&policy)
        .map_err(|e| Error::config(field, e.to_string()))?;
    let rec = match rec {
        None => None,
        Some(label) => Some(
            (0..game.num_actions())
                .find(|&a| game.action_label(a) == *label)
                .ok_or_else(|| Error::config(format!("{field}.recommend"), format!("unknown action `{label}`")))?,
        ),
    };
    Ok((policy, rec))
}

fn grid_policies(game: &GameSpec, k: usize) -> Result<Vec<Policy>> {
    let pts: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    match game.kind() {
        GameKind::Linear(_) => Ok(pts.into_iter().map(Policy::Contract).collect()),
        GameKind::Persuasion(p) if p.num_strategies() == 2 => {
            let mut out = Vec::new();
            for &q0 in &pts {
                for &q1 in &pts {
                    out.push(Policy::Scheme(SignalScheme::new(vec![[1.0 - q0, 1.0 - q1], [q0, q1]])?));
                }
            }
            Ok(out)
        }
        _ => Err(Error::config(
            "game.benchmark_grid",
            "grids exist for linear games and two-strategy persuasion games",
        )),
    }
}

pub fn resolve_state(space: &StateSpace, r: &StateRef, field: &str) -> Result<usize> {
    let y = match r {
        StateRef::Index(i) => *i,
        StateRef::Label(l) => space
            .index_of(l)
            .ok_or_else(|| Error::config(field, format!("unknown state `{l}`")))?,
    };
    if y >= space.size() {
        return Err(Error::config(field, format!("state index {y} out of range")));
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "version": 1,
            "game": {"fixture": "two-action-tie", "benchmark": [0.25, 0.5]},
            "mechanism": {"kind": "general"},
            "forecaster": {"kind": "calibrated", "grid": 16},
            "agent": "follower",
            "states": {"kind": "iid", "probs": [0.5, 0.5]},
            "horizon": 10
        })
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(cfg.repetitions, 32);
        let (g, recs) = cfg.build_game().unwrap();
        assert_eq!(g.benchmark().len(), 2);
        assert_eq!(recs, vec![None, None]);
    }

    #[test]
    fn unknown_field_names_its_path() {
        let mut v = base();
        v["forecaster"]["gird"] = 3.into();
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.is_config());
        assert!(err.to_string().contains("forecaster"), "{err}");
    }

    #[test]
    fn recommendation_labels_resolve() {
        let mut v = base();
        v["game"] = serde_json::json!({
            "fixture": "work-shirk",
            "benchmark": [{"policy": 0.5, "recommend": "work"}, {"policy": 0.6, "recommend": "work"}]
        });
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.build_game().unwrap().1, vec![Some(0), Some(0)]);
        v["game"]["benchmark"][0]["recommend"] = "nap".into();
        let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("recommend"), "{err}");
    }

    #[test]
    fn grid_benchmarks() {
        let mut v = base();
        v["game"] = serde_json::json!({"fixture": "prosecutor", "benchmark_grid": 2});
        let cfg = ExperimentConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(cfg.build_game().unwrap().0.benchmark().len(), 9);
    }

    #[test]
    fn rejects_bad_values() {
        for (path, val) in [("version", serde_json::json!(2)), ("repetitions", serde_json::json!(0))] {
            let mut v = base();
            v[path] = val;
            let err = ExperimentConfig::from_json(&v.to_string()).unwrap_err();
            assert!(err.is_config() && err.to_string().contains(path));
        }
        let mut v = base();
        v["game"]["benchmark"] = serde_json::json!([1.5]);
        assert!(ExperimentConfig::from_json(&v.to_string()).unwrap_err().is_config());
    }
}
