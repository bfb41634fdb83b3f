//! Tabular ingestion: schema sidecars, CSV loading, class balancing,
//! deterministic splits, one-hot / min-max encoding, and a synthetic
//! two-Gaussian dataset with a known Bayes boundary.

mod dataset;
mod encode;
mod schema;
mod synth;

pub use dataset::{balance_upsample, load_case_rows, load_csv, split, split_indices, Dataset, SplitTag};
pub use encode::{Block, EncodedDataset, Encoder, FeatureRange, Layout};
pub use schema::{FeatureKind, FeatureSchema, FeatureSpec};
pub use synth::{synth_gaussian, GaussianOracle, Hyperplane};
