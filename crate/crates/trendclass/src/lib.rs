//! Classification of trending social-media hashtags as promoted or organic.
//!
//! The library covers the whole workflow: ingesting tweet streams and trend
//! manifests, slicing them into sliding windows, extracting a 487-feature
//! time series per trend, encoding the series (piece-wise aggregation and
//! SAX words), classifying with KNN-DTW, SAX-VSM or flat KNN, and running
//! wrapper feature-selection experiments with cross-validated ROC/AUC
//! reporting. A synthetic corpus generator produces labeled trend streams
//! for end-to-end verification.

pub mod classify;
pub mod dtw;
pub mod encoding;
pub mod error;
pub mod features;
pub mod ingest;
pub mod pipeline;
pub mod stats;
pub mod synth;

pub use error::Error;
pub use ingest::{Label, TrendRecord, TweetRecord, UserMeta, WindowingConfig};
