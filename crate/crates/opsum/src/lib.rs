//! Query-focused extractive opinion summarization.
//!
//! Candidate sentences are scored by a listwise-trained ranker, grouped by
//! topic, author, and polarity, and selected greedily under a length budget
//! by maximizing a monotone submodular coverage objective interpolated with
//! a pairwise dispersion term. A built-in harness evaluates summaries with
//! Jensen-Shannon divergence and ROUGE, and sweeps the dispersion /
//! content-coverage / dissimilarity grid.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod lexicon;
pub mod objective;
pub mod pipeline;
pub mod ranker;
pub mod similarity;
pub mod summarizer;
pub mod topics;

pub use error::{Error, Result};
