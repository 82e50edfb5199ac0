//! Stratify social-media users by posting volume and interest narrowness,
//! flag anomalous (high-volume, narrow-interest) accounts and characterize
//! how they interact through k-core analysis of the mention graph.
//!
//! The pipeline runs bottom-up through the modules:
//!
//! * [`corpus`]: record parsing, tokenization, time partitioning.
//! * [`ett`]: per-interval extreme-tweeter flags and interval summaries.
//! * [`narrowness`]: bag-of-words text matrices and SVD energy scores.
//! * [`detect`]: the end-to-end anomalous-user detector.
//! * [`netgraph`]: mention graph, connection patterns, core decomposition.
//! * [`groups`]: anomalous group, group coreness, CNR and DR.
//! * [`report`]: tabular exports.
//! * [`synth`]: synthetic corpora with planted groups.
//! * [`cli`]: the `ettscope` command line.

pub mod cli;
pub mod corpus;
pub mod detect;
mod error;
pub mod ett;
pub mod groups;
pub mod linalg;
pub mod narrowness;
pub mod netgraph;
pub mod report;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
