//! Core algorithms for turning building-damage segmentation masks into
//! grounded annotation documents.
//!
//! The crate is `no_std` (with `alloc`) and side-effect free: it covers the
//! damage-category domain, the five-zone spatial partition, connected-component
//! instance extraction with PCA-fitted oriented boxes, zonal statistics,
//! dual-threshold severity grading, statistics-first narration, and the text
//! evaluation metrics used to score generated annotations. File formats,
//! networking, and the CLI live in the companion `damast` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod grading;
pub mod instances;
pub mod mask;
pub mod metrics;
pub mod narration;
pub mod pipeline;
pub mod stats;
pub mod zones;

pub use grading::{assess, DamageAssessment, GradingMode};
pub use instances::{extract_instances, fit_obb, BuildingInstance, Connectivity, OrientedBox};
pub use mask::{CategoryCounts, DamageCategory, MaskError, Palette, SegmentationMask};
pub use narration::{
    build_prompt, compile_annotation, compile_counting, compile_summary, generate_description,
    AnnotationDocument, GenerationPrompt, NarrationError, TemplateBackend, TextBackend,
};
pub use pipeline::{annotate_mask, AnnotateOptions};
pub use stats::{
    class_balance, compute_zone_stats, cooccurrence, size_distribution, word_frequency, Scope,
    ZonalStatistics, ZoneStats,
};
pub use zones::{Zone, ZoneGeometry};
