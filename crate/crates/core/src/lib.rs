//! Compressive-sensing reconstruction and benchmarking.
//!
//! The crate covers the full pipeline: image ingestion ([`loaders`]),
//! random measurement operators ([`sensing`]), reconstruction solvers
//! ([`solvers`]), quality and throughput metrics ([`metrics`]), and the
//! weighted score aggregation that condenses a method's results into a
//! single comparable number ([`scoring`]).
//!
//! Images are planar `f64` arrays in `[0, 1]` ([`data::Image`]); each
//! channel is sensed and reconstructed independently as a flattened
//! row-major signal.

pub mod data;
pub mod error;
pub mod loaders;
pub mod metrics;
pub mod scoring;
pub mod sensing;
pub mod solvers;

pub use data::Image;
pub use error::{Error, Result};
