//! Discriminating two nonorthogonal pure qubit states with a guaranteed
//! error bound while minimizing the average number of copies consumed.
//!
//! Four strategies are covered: fully biased (FBM) and unbiased (UBM) fixed
//! measurements, the adaptive locally optimal scheme (LOL), and the globally
//! optimal fixed angle (GOF) found by [`optimizer::optimize_angle`].
//! Numerical code is generic over [`Real`]; the aliases below fix it to `f64`.

pub mod engine;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod posterior;
pub mod scalar;
pub mod strategies;
pub mod stringlab;

pub use error::{Error, Result};
pub use model::{Hypothesis, Outcome, OutcomeString};
pub use scalar::Real;

pub type DiscriminationProblem = model::DiscriminationProblem<f64>;
pub type MeasurementConfig = model::MeasurementConfig<f64>;
pub type PosteriorState = posterior::PosteriorState<f64>;
pub type CostResult = strategies::CostResult<f64>;
pub type StrategySpec = strategies::StrategySpec<f64>;
pub type WalkSpec = strategies::WalkSpec<f64>;
pub type AngleScan = optimizer::AngleScan<f64>;
pub type TerminationString = stringlab::TerminationString<f64>;
pub type StringSet = stringlab::StringSet<f64>;

pub type DiscriminationProblemF32 = model::DiscriminationProblem<f32>;
pub type CostResultF32 = strategies::CostResult<f32>;
