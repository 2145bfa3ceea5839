//! Fairness-aware multi-objective evolutionary learning of small neural
//! classifiers, ensemble selection from the evolved model set, and the
//! set-quality indicators used to compare runs.

pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod evolve;
pub mod indicators;
pub mod metrics;
pub mod moea;
pub mod nnet;
pub mod seed;

pub use error::{Error, Result};
