use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column}: cannot parse {value:?} as a number")]
    ParseCell { row: usize, column: usize, value: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("row {row}, column {column}: non-finite value")]
    NonFinite { row: usize, column: usize },
    #[error("dataset has no rows")]
    EmptyDataset,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("label column {column} out of range for {width} columns")]
    LabelColumnOutOfRange { column: usize, width: usize },
    #[error("label vector length {labels} does not match {rows} rows")]
    LabelLength { labels: usize, rows: usize },
    #[error("granular ball needs at least one member")]
    EmptyBall,
    #[error("instance index {index} out of range for {n} instances")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("a singleton ball cannot be split")]
    SingletonSplit,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("density undefined for a ball with zero radius")]
    ZeroRadius,
    #[error("empty ball list")]
    NoBalls,
    #[error("k-NN graph needs at least two balls, got {0}")]
    TooFewBalls(usize),
    #[error(
        "requested {clusters} clusters but only {balls} granular balls were generated; lower the penalty coefficient"
    )]
    TooFewBallsForClusters { clusters: usize, balls: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("label sequences differ in length: {0} vs {1}")]
    LabelLengthMismatch(usize, usize),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
