//! GPU telemetry cryptojacking detection toolkit.
//!
//! Ingests device-sampler and kernel-profiler logs (or generates calibrated
//! synthetic ones), extracts windowed features, trains lightweight binary
//! classifiers, and flags miner-like GPU activity in batch or streaming mode.
//!
//! The numeric core is generic over [`Scalar`] (f32 or f64); [`Real`] is the
//! concrete type used by the CLI and the on-disk formats.

pub mod classifiers;
pub mod detector;
pub mod error;
pub mod features;
pub mod ingest;
pub mod report;
pub mod scalar;
pub mod sim;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Default scalar type for tools and file formats.
pub type Real = f64;
/// Single-precision alternative for memory-constrained embedding.
pub type Real32 = f32;
