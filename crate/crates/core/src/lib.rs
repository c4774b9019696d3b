//! Zero-shot video retrieval from per-frame image-text embeddings.
//!
//! Frames of a video are embedded one by one, aggregated into video vectors
//! ([`aggregation`]), compared with caption embeddings by cosine similarity
//! ([`embedding`]), ranked under the standard benchmark protocols
//! ([`ranking`]) and scored with recall@k and rank statistics ([`metrics`]).
//! The engine never runs a neural network: it consumes `.frem` archives
//! produced by an external extractor ([`dataset`]).

pub mod aggregation;
pub mod analysis;
pub mod dataset;
pub mod embedding;
pub mod error;
pub mod metrics;
pub mod ranking;

pub use aggregation::{
    aggregate, aggregate_kmeans, aggregate_mean, aggregate_single_frame, AggregationConfig,
    AggregationMethod, KMeansParams, VideoRepresentation,
};
pub use embedding::{
    cosine_similarity, l2_normalize, similarity_matrix, Embedding, FrameMatrix, SimilarityMatrix,
};
pub use error::{Error, Result};
pub use metrics::{evaluate, EvalOptions, MetricReport, StdConvention};
pub use ranking::{
    collapse_min_rank_by_video, min_rank_multi_gallery, rank_of_target, rank_queries, GroundTruth,
    Grouping, Judgement, RankVector,
};
