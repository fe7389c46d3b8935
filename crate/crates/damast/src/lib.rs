//! IO, dataset, and CLI companion to `damast-core`.
//!
//! This crate carries everything with side effects: raster decoding, the raw
//! mask format, dataset manifests, the batch annotation runner, analytics
//! reports, and the HTTP clients for external text and embedding backends.

pub mod annotate;
pub mod backend;
pub mod batch;
pub mod cli;
pub mod io;
pub mod manifest;
pub mod report;

pub use annotate::annotate_one;
pub use backend::{ExternalChatBackend, ExternalConfig, ExternalEmbedding};
pub use batch::{batch_annotate, BatchConfig, RunSummary};
pub use io::{load_mask, LoadOptions, MaskMode};
pub use manifest::{build_manifest, Manifest, ManifestEntry, Split};
