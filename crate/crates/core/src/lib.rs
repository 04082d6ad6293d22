//! Change propagation for models, cast as minimal-cost state-space search.
//!
//! A primary change is applied to a model; the engine then searches for the
//! cheapest sequence of secondary primitive actions that makes the model
//! well-formed and consistent with its constraints again, without undoing
//! the primary change.
//!
//! The numeric type of costs and similarity scores is generic (see
//! [`scalar::Scalar`]); the aliases below fix it to exact rationals or `f64`.

pub mod dsl;
pub mod fixtures;
pub mod harness;
pub mod model;
pub mod proximity;
pub mod repair;
pub mod report;
pub mod scalar;
pub mod search;
#[cfg(test)]
mod testutil;

pub use scalar::Scalar;

/// Exact rational scalar used by default.
pub type Rational = num_rational::Rational64;

pub type ExactCosts = model::CostConfig<Rational>;
pub type FloatCosts = model::CostConfig<f64>;
pub type ExactPlan = model::Plan<Rational>;
pub type FloatPlan = model::Plan<f64>;
pub type ExactConfig = search::SearchConfig<Rational>;
pub type FloatConfig = search::SearchConfig<f64>;
pub type ExactResult = search::PropagationResult<Rational>;
pub type FloatResult = search::PropagationResult<f64>;
pub type ExactProximity = proximity::ProximityReport<Rational>;
pub type FloatProximity = proximity::ProximityReport<f64>;
