//! Boundary-driven counterfactual explanations for tabular classifiers.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`data`] loads a CSV with a schema sidecar, balances, splits and encodes it.
//! 2. [`classifier`] trains a dense softmax network on the encoded rows.
//! 3. [`boundary`] trains two adversarial autoencoders against the frozen
//!    classifier and refines their outputs by bisection into a set of
//!    critical instances that sit on the decision boundary.
//! 4. [`intervention`] turns the critical set into counterfactuals, either the
//!    nearest critical instance (minimal mode) or a preference-ordered
//!    feature-by-feature search (constrained mode).
//! 5. [`evaluation`] scores a batch of counterfactuals against an
//!    independently trained [`simulator`].
//!
//! Everything is deterministic given the seeds. Batch stages run on rayon when
//! the `parallel` feature is enabled; see [`par::Exec`].

pub mod boundary;
pub mod classifier;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod intervention;
pub mod neural;
pub mod par;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};

/// Class index of the normal (desired) outcome.
pub const NORMAL: usize = 0;
/// Class index of the abnormal outcome.
pub const ABNORMAL: usize = 1;
