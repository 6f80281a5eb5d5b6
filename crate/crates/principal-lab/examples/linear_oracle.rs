//! Stable linear contract for a few forecasts on a two-action game.
//!
//!     cargo run --example linear_oracle

use principal_lab::game::fixtures::two_action_tie_game;
use principal_lab::game::Forecast;
use principal_lab::oracles::{is_stable, linear_stable_oracle, LinearOracleParams};

fn main() -> principal_lab::Result<()> {
    let game = two_action_tie_game(vec![0.25, 0.5]);
    for t in [1usize << 10, 1 << 16] {
        let params = LinearOracleParams::schedule(t);
        println!("T={t} beta={:.4} delta={:.4}", params.beta(), params.delta());
        for mu in [0.0, 0.3, 0.7] {
            let f = Forecast::binary(mu)?;
            let d = linear_stable_oracle(&game, &f, &params)?;
            let p = principal_lab::game::Policy::Contract(d.contract);
            let slack = params.eps(game.as_linear().expect("linear game"));
            let cert = is_stable(&game, &p, &f, slack, 0.0)?;
            println!(
                "  mu={mu:.1} optimistic={:.2} stable contract={:.4} certified={}",
                d.p_optimistic,
                d.contract,
                cert.is_valid()
            );
        }
    }
    Ok(())
}
