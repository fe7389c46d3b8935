//! Batch annotation over a manifest with a bounded worker pool.
//!
//! Entries process independently; a corrupt raster records one failure and
//! never aborts the run. Results merge in manifest order, so the output tree
//! is byte-identical for any worker count.

use std::fs;
use std::path::{Path, PathBuf};

use damast_core::grading::GradingMode;
use damast_core::instances::Connectivity;
use damast_core::narration::{AnnotationDocument, TemplateBackend, TextBackend};
use damast_core::pipeline::AnnotateOptions;
use serde::Serialize;

use crate::annotate::annotate_one;
use crate::backend::{ExternalChatBackend, ExternalConfig};
use crate::io::{load_mask, LoadOptions};
use crate::manifest::{Manifest, ManifestEntry};

/// Which text backend a run uses.
#[derive(Debug, Clone, Default)]
pub enum BackendChoice {
    #[default]
    Template,
    External(ExternalConfig),
}

/// Batch runner configuration.
#[derive(Debug, Clone, Default)]
pub struct BatchConfig {
    /// Worker threads; zero means one per logical CPU.
    pub workers: usize,
    pub connectivity: Connectivity,
    pub grading_mode: GradingMode,
    pub load: LoadOptions,
    pub backend: BackendChoice,
    pub instruction: String,
}

/// Errors that abort a whole batch run (per-entry failures do not).
#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("cannot create output directory {}: {source}", path.display())]
    CreateDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// One line of the run summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EntrySummary {
    pub id: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Aggregated outcome of a batch run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub ok: usize,
    pub failed: usize,
    pub entries: Vec<EntrySummary>,
}

fn process_entry(
    entry: &ManifestEntry,
    out_dir: &Path,
    config: &BatchConfig,
    backend: &dyn TextBackend,
    concurrent_zones: bool,
) -> Result<AnnotationDocument, String> {
    let mask = load_mask(&entry.mask, &config.load).map_err(|e| e.to_string())?;
    let options = AnnotateOptions {
        image_id: entry.id.clone(),
        connectivity: config.connectivity,
        grading_mode: config.grading_mode,
        instruction: config.instruction.clone(),
    };
    let document =
        annotate_one(&mask, &options, backend, concurrent_zones).map_err(|e| e.to_string())?;
    write_document(&document, &entry.id, out_dir).map_err(|e| e.to_string())?;
    Ok(document)
}

/// Writes `<id>.annotation.json` and the `<id>.obb.txt` sidecar.
pub fn write_document(
    document: &AnnotationDocument,
    id: &str,
    out_dir: &Path,
) -> Result<(), BatchError> {
    let json_path = out_dir.join(format!("{id}.annotation.json"));
    let mut text = serde_json::to_string_pretty(document).expect("document serializes");
    text.push('\n');
    fs::write(&json_path, text).map_err(|source| BatchError::Write { path: json_path, source })?;

    let obb_path = out_dir.join(format!("{id}.obb.txt"));
    let mut sidecar = document.quantitative.obb_records.join("\n");
    if !sidecar.is_empty() {
        sidecar.push('\n');
    }
    fs::write(&obb_path, sidecar).map_err(|source| BatchError::Write { path: obb_path, source })
}

/// Annotates every manifest entry into `out_dir` and writes
/// `run_summary.json`. Failures are isolated per entry and recorded in the
/// summary.
pub fn batch_annotate(
    manifest: &Manifest,
    out_dir: &Path,
    config: &BatchConfig,
) -> Result<RunSummary, BatchError> {
    fs::create_dir_all(out_dir)
        .map_err(|source| BatchError::CreateDir { path: out_dir.into(), source })?;

    let template;
    let external;
    let (backend, concurrent_zones): (&dyn TextBackend, bool) = match &config.backend {
        BackendChoice::Template => {
            template = TemplateBackend::new(config.grading_mode);
            (&template, false)
        }
        BackendChoice::External(external_config) => {
            external = ExternalChatBackend::new(external_config.clone());
            (&external, true)
        }
    };

    let workers = if config.workers == 0 {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        config.workers
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| BatchError::Pool(e.to_string()))?;

    let results: Vec<Result<AnnotationDocument, String>> = pool.install(|| {
        use rayon::prelude::*;
        manifest
            .entries
            .par_iter()
            .map(|entry| process_entry(entry, out_dir, config, backend, concurrent_zones))
            .collect()
    });

    let mut entries = Vec::with_capacity(results.len());
    let mut ok = 0;
    let mut failed = 0;
    for (entry, result) in manifest.entries.iter().zip(results) {
        match result {
            Ok(_) => {
                ok += 1;
                entries.push(EntrySummary { id: entry.id.clone(), status: "ok", error: None });
            }
            Err(message) => {
                failed += 1;
                entries.push(EntrySummary {
                    id: entry.id.clone(),
                    status: "failed",
                    error: Some(message),
                });
            }
        }
    }

    let summary = RunSummary { ok, failed, entries };
    let summary_path = out_dir.join("run_summary.json");
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    fs::write(&summary_path, text)
        .map_err(|source| BatchError::Write { path: summary_path, source })?;
    Ok(summary)
}
