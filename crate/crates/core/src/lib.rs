//! Predicts the weekly popularity contest between two rival apps from
//! crowdsourced record streams.
//!
//! The pipeline ingests app-store reviews, microblog posts, and download
//! counts ([`ingest`]), mines text for sentiment and comparative
//! opinions ([`textmine`]), extracts coarse and fine competitive
//! features with contest labels ([`features`]), and backtests
//! from-scratch random forests against a last-value baseline ([`eval`],
//! [`model`]). A deterministic generator ([`synth`]) produces synthetic
//! datasets with controllable signal strength for experiments and
//! fixtures.
//!
//! The numeric kernels are generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the aliases below pin the `f64` instantiations the
//! pipeline uses.

pub mod eval;
pub mod features;
pub mod ingest;
pub mod model;
pub mod num;
pub mod stats;
pub mod synth;
pub mod textmine;

/// `f64` tree, the pipeline's concrete instantiation.
pub type Tree = model::Tree<f64>;
/// `f64` forest, the pipeline's concrete instantiation.
pub type Forest = model::Forest<f64>;

pub use eval::{ablation_run, classification_metrics, rmse, rolling_evaluate, EvalReport, EvalScheme};
pub use features::{
    build_matrix, coarse_features, compute_labels, extract_matrix, fine_features, ContestClass,
    ContestLabels, FeatureMatrix, FeatureOptions, SubsetSpec, TextAssets,
};
pub use ingest::{
    bucket, parse_downloads, parse_microblogs, parse_reviews, App, Dataset, DownloadRecord,
    MicroblogRecord, ReviewRecord, WindowSpec, WindowedDataset,
};
pub use model::{fit_forest, fit_tree, last_baseline, ForestParams, TreeParams};
pub use synth::{generate, Scenario, SynthOutput};
pub use textmine::{
    cosine_similarity, count_mentions, detect_comparisons, score_sentiment,
    sentiment_distribution, ComparativeDictionary, MatchMode, SentimentDistribution,
    SentimentLexicon, SentimentThresholds,
};
