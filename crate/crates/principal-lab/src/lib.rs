pub mod agents;
pub mod cli;
pub mod error;
pub mod forecasting;
pub mod game;
pub mod harness;
pub mod oracles;

pub use error::{Error, Result};
