//! Simulation engine for distributed quantum classifiers.
//!
//! Two remote processors share only pre-distributed Bell pairs. Each embeds
//! its half of the input, runs a local convolutional/pooling circuit and emits
//! one bit; a classifier reads the weighted joint distribution of the two bits.
//! The crate provides the statevector kernel, circuit templates, adjoint
//! gradients, the classifier and its losses, dataset generators, the
//! Fisher-information effective dimension, training loops, a classical
//! distributed baseline and a campaign runner.

pub mod campaign;
pub mod circuit;
pub mod datasets;
pub mod dnn;
pub mod effdim;
mod error;
pub mod grad;
pub mod model;
pub mod qsim;
pub mod train;

pub use error::{Error, Result};
