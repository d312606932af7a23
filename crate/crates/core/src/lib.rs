//! Federated gradient-boosted decision trees for binary classification.
//!
//! The crate covers horizontally partitioned training (clients submit masked,
//! Paillier-encrypted gradient histograms to a server) and vertically
//! partitioned training (a label-holding active party and feature-holding
//! passive parties exchange encrypted gradients and bin-level aggregates),
//! together with Bayesian hyperparameter tuning, classification metrics,
//! a synthetic well-data generator and an in-process multi-party harness.

pub mod data;
pub mod error;
pub mod eval;
pub mod fed_hfl;
pub mod fed_vfl;
pub mod gbt;
pub mod hpo;
pub mod orchestrator;
pub mod phe;

pub use error::{Error, Result};
