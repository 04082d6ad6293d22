//! Verification of propagation runs: postulate checks, a brute-force
//! minimality oracle, and seeded random instances.
//!
//! The checks re-evaluate constraints and multiplicities with their own
//! evaluator ([`reference`]) instead of the engine's goal test.

mod oracle;
mod postulates;
mod random;
pub mod reference;

pub use oracle::{
    all_actions, exhaustive_oracle, exhaustive_oracle_bounded, OracleOutcome, ValueUniverse,
};
pub use postulates::{
    check_postulates, permuted_primary, Check, PostulateReport, RunInputs, Status,
    ORACLE_SUCCESSOR_BUDGET,
};
pub use random::{random_instance, RandomInstance, RandomParams};
