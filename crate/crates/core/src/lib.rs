//! Feature-learning strength laboratory.
//!
//! Simulators for solvable deep-linear toy models, centered muP MLP training,
//! a parallel learning-rate/richness sweep engine, and curvature and
//! representation diagnostics.

pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod report;
pub mod sweep;
pub mod toy;

pub use error::{Error, Result};
