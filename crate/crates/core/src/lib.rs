//! Evolutionary generation of synthetic training data.
//!
//! A population of candidate datasets is evolved with point mutations. Each
//! candidate is scored by training a small multilayer perceptron on it and
//! measuring the network's mean squared error on both the candidate itself and
//! a (possibly tiny) batch of real data. The fittest candidate can then be used
//! to train downstream classifiers in place of the scarce real data.
//!
//! The numeric core ([`matrix`], [`dataset`], [`mlp`], [`evolve`]) is generic
//! over the floating-point type through [`Scalar`]; the aliases at the crate
//! root fix it to `f64`, which is what [`harness`] and the command-line front
//! end use.

pub mod dataset;
pub mod error;
pub mod evolve;
pub mod harness;
pub mod matrix;
pub mod mlp;
pub mod scalar;
pub mod seed;
pub mod stats;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type Matrix32 = matrix::Matrix<f32>;
pub type Dataset64 = dataset::Dataset<f64>;
pub type Dataset32 = dataset::Dataset<f32>;
pub type DataSplit64 = dataset::DataSplit<f64>;
pub type Mlp64 = mlp::MlpModel<f64>;
pub type Mlp32 = mlp::MlpModel<f32>;
pub type Genome64 = evolve::Genome<f64>;
pub type Genome32 = evolve::Genome<f32>;
