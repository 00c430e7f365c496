//! Adversarial route manipulation against a landmark-grounded topological
//! navigation planner, at desk scale.
//!
//! The pipeline: a differentiable toy [`embedding::Encoder`] stands in for the
//! vision-language model; [`worldgen`] builds graphs whose node images and
//! landmark texts share concepts; [`planner`] picks routes by landmark
//! probability and travel cost; [`attack`] rewrites node images so the
//! planner heads for an attacker-chosen target; [`detector`] looks for the
//! rewritten images by their noise sensitivity; [`metrics`] scores it all.

pub mod attack;
pub mod detector;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod navgraph;
pub mod planner;
pub mod scenario;
pub mod seed;
pub mod tensor;
pub mod worldgen;

pub use error::{Error, Result, StoreError};
