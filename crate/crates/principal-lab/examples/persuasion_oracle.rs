//! Prosecutor and judge: envelope, concave closure and the stabilized signal scheme.
//!
//!     cargo run --example persuasion_oracle

use principal_lab::game::fixtures::prosecutor_game;
use principal_lab::oracles::{build_envelope, concave_closure, persuasion_stable_oracle, PersuasionOracleParams};

fn main() -> principal_lab::Result<()> {
    let game = prosecutor_game(vec![]);
    let spec = game.as_persuasion().expect("persuasion game");
    let env = build_envelope(spec)?;
    for piece in &env.pieces {
        println!(
            "{} on [{:.3}, {:.3}]",
            spec.strategies[piece.strategy], piece.lo, piece.hi
        );
    }
    let closure = concave_closure(spec, &env);
    println!(
        "closure points {:?}",
        closure.points.iter().map(|p| (p.0, p.1)).collect::<Vec<_>>()
    );
    println!("v*(0.3) = {}", closure.value(0.3));

    for beta in [0.1, 0.05] {
        let params = PersuasionOracleParams::from_beta(beta)?;
        let scheme = persuasion_stable_oracle(spec, 0.3, params)?;
        let post = scheme.posteriors(0.3);
        println!("beta={beta} delta={:.6} scheme={:?}", params.delta, scheme.rows());
        for (s, (w, mu)) in post.parts.iter().enumerate() {
            println!("  signal {s}: weight {w:.4} posterior {mu:?}");
        }
    }
    Ok(())
}
