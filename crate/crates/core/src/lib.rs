//! Evaluation toolkit for cross-modal (video and text) video summarization.
//!
//! * [`temporal_codec`]: `[fNN]` frame tokens and the normalized timeline.
//! * [`summary_parser`]: generated summaries to frame indices and clean text.
//! * [`importance`]: per-frame importance from digit logits.
//! * [`embeddings`]: unit-norm embedding sets, `XEMB` files, remote provider.
//! * [`metrics`]: frame F1, rank correlations, CLIP-style greedy matching, caption metrics.
//! * [`dataset`]: manifests, redundancy filtering, corpus statistics.
//! * [`report`] and [`cli`]: corpus evaluation and the `xum-eval` command line.

pub mod cli;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod importance;
pub mod metrics;
pub mod report;
pub mod summary_parser;
pub mod temporal_codec;

pub use error::{Error, Result};
