//! Conditional flow-matching surrogate models for fields sampled on ordered
//! point sets.

pub mod data;
pub mod error;
pub mod flowmatch;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod rng;
pub mod tensor;
pub mod train;
#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use tensor::{no_grad, Float, Param, Tensor};
