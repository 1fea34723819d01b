//! Granular-ball clustering.
//!
//! The pipeline has two halves. [`generation`] divides the instance space
//! into a binary tree of granular balls, adapts the granularity level from
//! the tree itself, and cuts the tree where the penalized total quality is
//! largest. [`graph`] then clusters the resulting balls by local quality
//! peaks on a k-nearest-neighbor graph with geodesic distances.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below are what the command-line front end uses.

pub mod ball;
pub mod dataset;
pub mod error;
pub mod generation;
pub mod graph;
pub mod metrics;
pub mod quality;
pub mod scalar;
pub mod synthetic;

pub use ball::{ball_distance, gbdpc_density, make_ball, split_ball, GranularBall};
pub use dataset::Dataset;
pub use error::{Error, Result};
pub use generation::{generate, AbnormalPolicy, GbTree, GbTreeNode, GenerationConfig, GenerationResult, NodeId};
pub use graph::{
    cluster, Ablation, ClusterConfig, ClusteringResult, DensityEstimator, DistanceMode, KnnGraph, Variant,
};
pub use metrics::{ari, contingency, nmi, nmi_with, ContingencyTable, NmiNormalization};
pub use quality::{IntervalSet, QualityConfig, RadiusChoice, SpecificityForm};
pub use scalar::Scalar;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type GranularBall64 = GranularBall<f64>;
pub type GranularBall32 = GranularBall<f32>;
pub type GbTree64 = GbTree<f64>;
pub type IntervalSet64 = IntervalSet<f64>;
pub type QualityConfig64 = QualityConfig<f64>;
pub type GenerationResult64 = GenerationResult<f64>;
pub type ClusteringResult64 = ClusteringResult<f64>;
