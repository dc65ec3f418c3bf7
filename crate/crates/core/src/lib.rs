//! Train multiclass linear text classifiers, apply debiasing interventions,
//! and audit the result with group-wise true-positive-rate metrics.
//!
//! The crate is organised bottom-up:
//!
//! - [`corpus`]: examples, datasets, tokenization, stopwords, splits, the
//!   gender swap lexicon and a synthetic biased-corpus generator.
//! - [`features`]: bag-of-words / TF-IDF featurization and the dense
//!   embedding file reader.
//! - [`classifier`]: seeded multinomial logistic regression.
//! - [`debias`]: counterfactual augmentation, nullspace projection, decoupled
//!   per-group training, equal-opportunity post-processing, and the pipeline
//!   that chains them.
//! - [`metrics`]: per-group TPR, GAP, GAP RMS and satisfaction verdicts.
//! - [`stats`]: repeated-seed runs and Welch's t-test.
//! - [`report`]: published-table replay and JSON / CSV / Markdown / SVG output.

pub mod classifier;
pub mod corpus;
pub mod debias;
mod error;
pub mod features;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod stats;

pub use error::{Error, ErrorKind, Result};
