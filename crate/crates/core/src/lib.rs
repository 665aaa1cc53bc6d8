//! Shapley attributions with joint baselines.
//!
//! The crate is generic over the scalar type (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the experiments, axiom checks and
//! CLI use.

pub mod attack;
pub mod axioms;
pub mod context;
pub mod density;
pub mod domain;
pub mod error;
pub mod field;
pub mod learners;
pub mod metrics;
pub mod scalar;
pub mod seed;
pub mod shapley;
pub mod value_functions;

pub use context::{Baseline, BaselineDistribution, GameContext};
pub use domain::{complement, enumerate_coalitions, splice, Coalition, DataPoint, Dataset};
pub use error::{Error, Result};
pub use field::{DensityField, ScalarField};
pub use scalar::Scalar;
pub use shapley::{exact_shapley, global_shapley, permutation_shapley, truncated_permutation_jbshap, AttributionVector};
pub use value_functions::{ValueFunction, ValueKind};

pub type Point = DataPoint<f64>;
pub type Data = Dataset<f64>;
pub type Context = GameContext<f64>;
pub type Net = learners::FeedForwardNet<f64>;
pub type Field = field::Field<f64>;
pub type Density = field::Density<f64>;

pub type Point32 = DataPoint<f32>;
pub type Context32 = GameContext<f32>;
pub type Net32 = learners::FeedForwardNet<f32>;
