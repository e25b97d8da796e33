//! Ex-ante adjustments of experimental effect estimates for rollout and
//! downstream operational decisions.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bayes;
pub mod belief;
pub mod error;
pub mod expectation;
pub mod quadrature;
pub mod regret;
pub mod roots;
pub mod scalar;
pub mod scenario;
pub mod sim;
pub mod snr;
pub mod solver;
pub mod special;

pub use belief::{build_belief_system, BeliefSystem, ExperimentDesign, NoiseModel, Posterior, PriorBelief};
pub use error::{PatroError, Result};
pub use expectation::{Expectations, Interval, McEstimate, QuadratureSpec};
pub use scalar::Real;
pub use snr::{BuiltinModel, DemandKind, NewsvendorSnr, PricingSnr, ServiceCapacitySnr, SnrModel};

/// Double-precision aliases.
pub type BeliefSystemF64 = BeliefSystem<f64>;
pub type ExpectationsF64 = Expectations<f64>;
pub type PriorBeliefF64 = PriorBelief<f64>;
pub type ExperimentDesignF64 = ExperimentDesign<f64>;
pub type NoiseModelF64 = NoiseModel<f64>;
pub type AdjustmentPairF64 = solver::AdjustmentPair<f64>;
pub type RegretBreakdownF64 = regret::RegretBreakdown<f64>;
pub type BuiltinModelF64 = BuiltinModel<f64>;
