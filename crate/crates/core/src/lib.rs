//! Energy-based world model over categorical consumer profiles.
//!
//! The crate is organised bottom-up:
//!
//! * [`schema`] describes the categorical world and its one-hot visible layer,
//!   ingests tabular datasets and generates synthetic planted-structure markets.
//! * [`rbm`] holds Restricted Boltzmann Machine primitives (energy, conditionals,
//!   contrastive divergence, analytic free energy, Gibbs sampling) together with
//!   exact enumeration routines for tiny models.
//! * [`dbm`] stacks RBMs into a Deep Boltzmann Machine: joint energy, mean-field
//!   belief inference, layer-wise pretraining, persistent-chain fine-tuning and
//!   exact/variational free energies.
//! * [`intervention`] clamps attribute changes and measures the resulting
//!   free-energy shift with paired statistics.
//! * [`checkpoint`] and [`beliefs`] define the on-disk formats shared with the
//!   command-line driver and downstream consumers.

pub mod beliefs;
pub mod checkpoint;
pub mod dbm;
mod error;
pub mod intervention;
pub mod math;
pub mod rbm;
pub mod rng;
pub mod schema;
pub mod stats;

pub use dbm::{BeliefState, DbmParams, MeanFieldConfig, PcdConfig};
pub use intervention::{InterventionResult, InterventionSpec, TTestResult};

pub use error::{Error, Result};

pub use rbm::{CdConfig, RbmParams};
pub use schema::{AttributeSchema, Dataset, Profile, Split, VisibleVector};
