use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use principal_lab::agents::SwapLearner;
use principal_lab::forecasting::{audit_bias, EventSet, ForecastGrid, Forecaster, ForecasterKind};
use principal_lab::game::{GameKind, GameSpec, Policy, StateSpace, TabularSpec};
use principal_lab::harness::metrics::{assumption_diagnostics, CountTable};
use principal_lab::harness::stream::PolicyBook;
use principal_lab::harness::{run_experiment, ExperimentConfig};

fn tabular_book(rng: &mut ChaCha8Rng, na: usize, ny: usize, np: usize) -> PolicyBook {
    let u: Vec<Vec<Vec<f64>>> = (0..na)
        .map(|_| {
            (0..np)
                .map(|_| (0..ny).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect()
        })
        .collect();
    let tab = TabularSpec {
        actions: (0..na).map(|a| format!("a{a}")).collect(),
        policies: (0..np).map(|p| format!("p{p}")).collect(),
        v: u.clone(),
        u,
    };
    let g = GameSpec::new(
        StateSpace::new((0..ny).map(|y| format!("y{y}")).collect()).unwrap(),
        GameKind::Tabular(tab),
        (0..np).map(Policy::Table).collect(),
    )
    .unwrap();
    let mut book = PolicyBook::default();
    for p in 0..np {
        book.intern(&g, &Policy::Table(p)).unwrap();
    }
    book
}

/// Max over every map `h: (context, action) -> action`, enumerated one map at a time.
fn brute_swap(counts: &CountTable, book: &PolicyBook, na: usize, ny: usize) -> f64 {
    let ctx: Vec<(usize, usize)> = counts.contexts().copied().collect();
    let slots = ctx.len() * na;
    let total = na.pow(slots as u32);
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut c = code;
        let mut gain = 0.0;
        for &(pid, r) in &ctx {
            let tab = book.table(pid);
            for a in 0..na {
                let h = c % na;
                c /= na;
                for y in 0..ny {
                    gain += counts.get(pid, r, a, y) as f64 * (tab.u(h, y) - tab.u(a, y));
                }
            }
        }
        best = best.max(gain);
    }
    best
}

fn small_config(seed: u64, agent: &str, mechanism: serde_json::Value, events: &str) -> ExperimentConfig {
    let v = json!({
        "version": 1,
        "game": {
            "states": ["low", "high"],
            "linear": {
                "actions": ["idle", "work"],
                "outcomes": ["fail", "success"],
                "value": [0.0, 1.0],
                "cost": [0.0, 0.1],
                "outcome_map": [[0, 0], [0, 1]]
            },
            "benchmark_grid": 4
        },
        "mechanism": mechanism,
        "forecaster": {"kind": "calibrated", "grid": 16, "events": events},
        "agent": agent,
        "states": {"kind": "iid", "probs": [0.4, 0.6]},
        "horizon": 300,
        "repetitions": 2,
        "seed": seed
    });
    ExperimentConfig::from_json(&v.to_string()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn cellwise_swap_regret_is_the_max_over_all_maps(seed in any::<u64>(), na in 2usize..=3, rounds in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ny = 2;
        let book = tabular_book(&mut rng, na, ny, 2);
        let mut counts = CountTable::new(na, ny);
        // at most two contexts keeps the enumeration at na^(2 na) maps
        for _ in 0..rounds {
            counts.record(rng.gen_range(0..2), 0, rng.gen_range(0..na), rng.gen_range(0..ny));
        }
        let d = assumption_diagnostics(&counts, &book);
        let brute = brute_swap(&counts, &book, na, ny);
        prop_assert!((d.swap_reg_sum - brute).abs() < 1e-9, "{} vs {}", d.swap_reg_sum, brute);
    }

    #[test]
    fn ledger_matches_bias_recomputed_from_scratch(seed in any::<u64>(), t in 1usize..200, p in 0.05f64..0.95) {
        let grid = ForecastGrid::new(16, 2).unwrap();
        let mut f = Forecaster::new(ForecasterKind::Calibrated, grid, EventSet::marginal(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let mut forecasts = Vec::new();
        let mut states = Vec::new();
        for _ in 0..t {
            let d = f.propose().unwrap();
            prop_assert!(d.mixture.len() <= 3);
            let y = usize::from(rng.gen_bool(p));
            forecasts.push(d.forecast);
            states.push(y);
            f.observe(y).unwrap();
        }
        let fresh = audit_bias(&forecasts, &states, f.events());
        prop_assert_eq!(fresh, f.bias_ledger().rows());
    }

    #[test]
    fn swap_learner_mixture_is_stationary(seed in any::<u64>(), na in 2usize..=4, rounds in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut learner = SwapLearner::new(na);
        for _ in 0..rounds {
            let key = (rng.gen_range(0..3), rng.gen_range(0..na));
            let a = learner.sample(key, &mut rng);
            let u: Vec<f64> = (0..na).map(|_| rng.gen_range(-1.0..1.0)).collect();
            learner.update(key, a, &u);
            let q = learner.mixture(key);
            prop_assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        prop_assert!(learner.max_residual() <= 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn runs_are_deterministic_and_decompose(seed in any::<u64>()) {
        let cfg = small_config(seed, "swap", json!({"kind": "stable-oracle", "schedule": "theorem"}), "thm2");
        let a = run_experiment(&cfg, None).unwrap();
        let b = run_experiment(&cfg, None).unwrap();
        prop_assert_eq!(&a.report, &b.report);
        prop_assert_eq!(a.realized_actions(), b.realized_actions());
        prop_assert!(a.report.decomposition.max_residual <= 1e-9);
    }

    #[test]
    fn follower_regret_is_bounded_by_event_bias(seed in any::<u64>()) {
        let cfg = small_config(seed, "follower", json!({"kind": "general", "eps": 0.0}), "thm4");
        let r = run_experiment(&cfg, None).unwrap().report;
        let check = r.follower_check.expect("follower under the general rule");
        prop_assert!(check.holds, "PR {} above bound {}", check.pr, check.bound);
        prop_assert_eq!(r.realized.secret_info_max_u, 0.0);
        prop_assert_eq!(r.realized.secret_info_max_v, 0.0);
        prop_assert!(r.decomposition.rows.iter().all(|row| row.b.abs() < 1e-9));
    }
}
