//! Bill-pay customer segmentation and churn profiling.
//!
//! The pipeline runs in stages, each one a module:
//!
//! - [`ingest`] parses raw billing exports into [`ingest::RawCustomerRecord`]s.
//! - [`features`] derives behavioural attributes (age group, county, length of
//!   service, sale day/time, invoice aggregates).
//! - [`rules`] assigns spender status and account class.
//! - [`table`] turns CSV files into typed learning tables.
//! - [`tree`] and [`bayes`] are the two classifiers.
//! - [`eval`] holds the metric suite and the split / cross-validation /
//!   full-training-set protocols.
//! - [`synth`] generates labelled synthetic datasets with the same schema.
//! - [`pipeline`] wires the stages together for the `churnseg` binary.

pub mod bayes;
pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod money;
pub mod pipeline;
pub mod rules;
pub mod synth;
pub mod table;
pub mod tree;

pub use error::{Error, Result};
