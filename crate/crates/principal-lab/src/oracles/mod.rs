//! Stable-policy oracles.

pub mod linear;
pub mod persuasion;
pub mod stability;

pub use linear::{linear_stable_oracle, tie_contracts, LinearDecision, LinearOracleParams};
pub use persuasion::{
    build_envelope, concave_closure, persuasion_stable_oracle, scheme_from_posteriors, stabilize_closure,
    ConcaveClosure, EnvelopeDecomposition, PersuasionOracle, PersuasionOracleParams, Posterior,
};
pub use stability::{check_optimal_stable, is_stable, StabilityCertificate, Verdict};
