//! Spillover-contained network experimentation, end to end: build or
//! generate weighted interaction graphs, cluster them into balanced
//! randomization units, hash clusters into experiment buckets, simulate
//! spillover to quantify containment, and run bucket-level treatment
//! effect inference with variance reduction.

pub mod clustering;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod inference;
pub mod rng;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
