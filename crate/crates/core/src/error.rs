//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the crate, from bad configuration to
/// malformed input data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("population is empty")]
    EmptyPopulation,

    #[error("point {row} has a non-finite feature value")]
    NonFiniteFeature { row: usize },

    #[error("sample size {target} is not in 1..={population}")]
    InvalidSampleSize { target: usize, population: usize },

    #[error("unknown reducer `{0}` (expected `centroid-distance` or `principal-component`)")]
    UnknownReducer(String),

    #[error("inclusion probabilities disagree with the window: {0}")]
    InconsistentProbabilities(String),

    #[error("cannot build a tree from an empty sample")]
    EmptySample,

    #[error("query has {point} features but the forest was trained on {training}")]
    DimensionMismatch { point: usize, training: usize },

    #[error("ragged input: row {row} has {got} features, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stream ended after {received} points; {needed} are required to fill the window")]
    StreamExhausted { received: usize, needed: usize },

    #[error("AUC needs at least one anomalous and one normal point")]
    AucUndefined,

    #[error("{what}: expected {expected} entries, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("contamination must lie in (0, 1), got {0}")]
    InvalidContamination(f64),

    #[error("per-type accuracy needs type tags alongside the labels")]
    MissingTypeTags,

    #[error("unknown anomaly type `{0}` (expected none, point, contextual or collective)")]
    UnknownTypeTag(String),

    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),

    #[error("injections overlap around position {0}")]
    OverlappingInjections(usize),

    #[error("{path}: no data rows")]
    NoRows { path: String },

    #[error("{path}: row {row}, column {column}: cannot parse `{value}` as a number")]
    BadCell {
        path: String,
        row: usize,
        column: usize,
        value: String,
    },

    #[error("line {line}: {reason}")]
    BadLine { line: usize, reason: String },

    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),

    #[error("forest snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
