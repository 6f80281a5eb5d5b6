//! State forecasters with low bias conditional on forecast-measurable events.

pub mod events;
pub mod forecaster;
pub mod grid;

pub use events::{audit_bias, update_ledgers, write_bias_csv, BiasLedger, BiasRow, EventFamily, EventSet};
pub use forecaster::{reduce_support, CalibrationLedger, ForecastDraw, Forecaster, ForecasterKind};
pub use grid::ForecastGrid;
