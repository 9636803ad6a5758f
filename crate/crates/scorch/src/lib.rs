//! Data ingestion, synthetic instances, reporting and the run harness
//! behind the `scorch` binary.

pub mod data;
pub mod report;
pub mod run;

pub use scorch_core as core;
