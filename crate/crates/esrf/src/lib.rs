//! Streaming random forests for evolving data streams.
//!
//! The crate provides incremental random Hoeffding trees, adaptive-windowing
//! drift detection, the adaptive random forest (ARF) baseline and the elastic
//! swap random forest (ESRF) that swaps low-accuracy learners against
//! background candidates and grows or shrinks its voting set on the fly.
//! Synthetic drifting stream generators, ARFF/CSV ingestion and prequential
//! evaluation harnesses round out a benchmark toolkit; the `esrf` binary
//! drives experiments from flat key=value configs.

pub mod config;
pub mod drift;
pub mod ensemble;
pub mod evaluation;
pub mod hoeffding_tree;
pub mod runner;
pub mod streams;
mod util;

pub use streams::{AttributeKind, AttributeSpec, Instance, InstanceStream, Schema};
pub use util::{argmax, derive_seed};
