//! Lateral path-following control for vehicles whose path sensor is mounted
//! away from the rear axle.
//!
//! * [`geometry`]: paths, path-frame errors, projection.
//! * [`vehicle`]: kinematic bicycle model in earth and path coordinates.
//! * [`controller`]: feedforward plus wrapped feedback steering law and its variants.
//! * [`analysis`]: linearisation, stability predicates, frequency response.
//! * [`sim`]: fixed-step closed-loop runs, metrics, controller comparison.
//! * [`config`], [`cli`], [`presets`]: batch front end.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod presets;
pub mod sim;
pub mod vehicle;

pub use error::{ConfigError, Error, Result};
