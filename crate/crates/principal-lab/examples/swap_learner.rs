//! A swap-regret learner in one context where the better action depends on a biased coin.
//!
//!     cargo run --example swap_learner

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use principal_lab::agents::SwapLearner;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut learner = SwapLearner::new(3);
    let key = (0, 0);
    for t in 1..=20_000u32 {
        let a = learner.sample(key, &mut rng);
        // action 2 pays most on average
        let y = rng.gen_bool(0.7);
        let u = if y { [0.2, 0.0, 0.6] } else { [0.2, 0.9, 0.1] };
        learner.update(key, a, &u);
        if t.is_power_of_two() && t >= 1024 {
            let q = learner.mixture(key);
            println!(
                "t={t:<6} mixture=[{:.3}, {:.3}, {:.3}] swap regret/t={:.4}",
                q[0],
                q[1],
                q[2],
                learner.realized_swap_regret() / f64::from(t)
            );
        }
    }
    println!("stationarity residual {:.2e}", learner.max_residual());
}
