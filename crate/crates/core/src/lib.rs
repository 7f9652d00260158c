//! Unsupervised matching of document pairs drawn from heterogeneous
//! collections (short curriculum concepts vs. long project descriptions).
//!
//! Two measures are provided:
//!
//! * [`similarity::avg_cos_sim`]: cosine between the weighted mean word
//!   vectors of both documents.
//! * [`similarity::top_n_cos_sim_avg`]: mean of the `n` highest pairwise
//!   word cosines among the `n` top-weighted words of each document. Besides
//!   the score it returns the word pairs it was computed from.
//!
//! The numeric core is generic over the scalar type (see [`Real`]); the
//! aliases below fix it to `f64`, which is what the CLI and harness use.

pub mod config;
pub mod convert;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod harness;
pub mod report;
pub mod scalar;
pub mod seed;
pub mod similarity;
pub mod weighting;

pub use error::{Error, Result};
pub use scalar::Real;

/// Word vectors stored as `f64`.
pub type Store = embeddings::EmbeddingStore<f64>;
/// Single-precision store, for memory-constrained loads of large vector files.
pub type StoreF32 = embeddings::EmbeddingStore<f32>;
pub type Cache = embeddings::PairSimCache<f64>;
pub type CacheF32 = embeddings::PairSimCache<f32>;
pub type Idf = weighting::IdfTable<f64>;
pub type Evidence = similarity::EvidenceTuple<f64>;
pub type Match = similarity::MatchResult<f64>;
pub type Scorer<'a> = similarity::Scorer<'a, f64>;
