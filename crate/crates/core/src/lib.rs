//! Anchor mining and re-prompting for semi-supervised video object
//! segmentation.
//!
//! Same-category candidates are scored against a D4-augmented feature pool
//! of the first-frame target, a few temporally separated high-scoring
//! candidates become extra anchors, and a memory tracker propagates the
//! target from all anchors at once.

pub mod anchors;
pub mod backends;
pub mod featurepool;
pub mod maskmedia;
pub mod metrics;
pub mod scalar;
pub mod synth;
pub mod tracker;

pub use scalar::Scalar;

pub type Embedding = backends::EmbeddingVector<f64>;
pub type Embedding32 = backends::EmbeddingVector<f32>;
pub type FeaturePool = featurepool::TargetFeaturePool<f64>;
pub type FeaturePool32 = featurepool::TargetFeaturePool<f32>;
pub type Score = featurepool::MatchScore<f64>;
pub type Score32 = featurepool::MatchScore<f32>;
pub type Schedule = anchors::PromptSchedule<f64>;
pub type Schedule32 = anchors::PromptSchedule<f32>;
pub type Track = tracker::TrackResult<f64>;
pub type Track32 = tracker::TrackResult<f32>;
pub type Metrics = metrics::VideoMetrics<f64>;
pub type Metrics32 = metrics::VideoMetrics<f32>;
