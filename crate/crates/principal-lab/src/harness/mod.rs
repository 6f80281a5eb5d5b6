//! Experiment harness: configs, stream generation, play, metrics and outputs.

pub mod config;
pub mod experiments;
pub mod lemmas;
pub mod mechanism;
pub mod metrics;
pub mod report;
pub mod run;
pub mod states;
pub mod stream;

pub use config::ExperimentConfig;
pub use mechanism::{ChoiceRule, Decision, Mechanism};
pub use run::{run_experiment, Outcome, RegretReport};
pub use stream::{generate_stream, Stream};
