//! Streaming anomaly detection built on isolation forests that are retrained
//! from balanced samples of the incoming stream.
//!
//! The pipeline, end to end:
//!
//! 1. [`stream::Detector`] buffers the stream into a sliding window and scores
//!    each arriving chunk with the current forest before any model update
//!    (scores are always out-of-sample).
//! 2. [`sampling`] reduces the window to per-point scalar scores, converts them
//!    to inclusion probabilities that sum to the sample size, and draws a
//!    balanced fixed-size sample with the cube method.
//! 3. [`iforest`] grows the isolation trees and turns mean path lengths into
//!    anomaly scores in (0, 1).
//! 4. After each full chunk the detector retires the trees that flagged the
//!    most anomalies and regrows them from a balanced sample of the new chunk,
//!    so the forest tracks drift without ever growing.
//!
//! [`eval`] holds the ranking metrics (AUC, contamination thresholding,
//! per-type accuracy), [`synth`] generates labeled sine-wave streams for
//! controlled experiments, and [`ingest`] reads datasets and line streams.

pub mod error;
pub mod eval;
pub mod iforest;
pub mod ingest;
mod rng;
pub mod sampling;
pub mod stream;
pub mod synth;

pub use error::{Error, Result};

/// One observation: a dense row of finite feature values.
pub type FeatureVector = Vec<f64>;
