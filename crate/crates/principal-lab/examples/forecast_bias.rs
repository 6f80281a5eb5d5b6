//! Calibrated forecaster against a stream that always picks the less likely state.
//!
//!     cargo run --example forecast_bias

use principal_lab::forecasting::{EventFamily, EventSet, ForecastGrid, Forecaster, ForecasterKind};

fn main() -> principal_lab::Result<()> {
    // two forecast-measurable events: "high looks likely" and its complement
    let events = EventSet::new(vec![EventFamily::new("high", |f| {
        Some(if f.get(1) >= 0.5 {
            "likely".into()
        } else {
            "unlikely".into()
        })
    })]);
    for t in [1024usize, 4096, 16384] {
        let mut f = Forecaster::new(ForecasterKind::Calibrated, ForecastGrid::new(32, 2)?, events.clone(), 7)?;
        for _ in 0..t {
            let draw = f.propose()?;
            let y = usize::from(draw.mean[1] < draw.mean[0]);
            f.observe(y)?;
        }
        println!("T={t:<6} max alpha={:.5}", f.bias_ledger().max_alpha());
        for row in f.bias_ledger().rows() {
            println!("  {:<16} n={:<6} alpha={:.5}", row.event_id, row.n_e, row.alpha);
        }
    }
    Ok(())
}
