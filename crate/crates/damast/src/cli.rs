//! Command-line interface: annotate, batch, stats, grade, eval, manifest.
//!
//! Exit codes: 0 success, 1 partial per-entry failures, 2 fatal.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use damast_core::grading::{assess, GradingMode};
use damast_core::instances::Connectivity;
use damast_core::metrics::{MetricSelection, ScsVariant};
use damast_core::pipeline::AnnotateOptions;

use crate::annotate::annotate_one;
use crate::backend::{ExternalChatBackend, ExternalConfig, ExternalEmbedding};
use crate::batch::{batch_annotate, write_document, BackendChoice, BatchConfig};
use crate::io::{load_mask, load_palette_config, LoadOptions, MaskMode};
use crate::manifest::{build_manifest, Manifest};
use crate::report::{compute_stats_report, print_json, run_eval, write_csv_tables, write_json_report};

#[derive(Parser)]
#[command(
    name = "damast",
    version,
    about = "Turns building-damage segmentation masks into grounded annotation documents, dataset analytics, and text-metric evaluations"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct MaskArgs {
    /// Pixel-value interpretation for mask files.
    #[arg(long, value_enum, default_value_t = MaskMode::Auto)]
    mode: MaskMode,
    /// Palette override config file (one `R,G,B=category_name` line each).
    #[arg(long)]
    palette_config: Option<PathBuf>,
    /// Per-channel tolerance for palette color matching.
    #[arg(long, default_value_t = 0)]
    palette_tolerance: u8,
}

impl MaskArgs {
    fn load_options(&self) -> anyhow::Result<LoadOptions> {
        let palette = match &self.palette_config {
            Some(path) => load_palette_config(path)?,
            None => Default::default(),
        };
        Ok(LoadOptions { mode: self.mode, palette, tolerance: self.palette_tolerance })
    }
}

#[derive(Copy, Clone, Default, ValueEnum)]
enum BackendArg {
    /// External when `DAMAST_LLM_ENDPOINT` is set, template otherwise.
    #[default]
    Auto,
    Template,
    External,
}

fn resolve_backend(arg: BackendArg) -> anyhow::Result<BackendChoice> {
    match arg {
        BackendArg::Template => Ok(BackendChoice::Template),
        BackendArg::Auto => Ok(ExternalConfig::chat_from_env()
            .map(BackendChoice::External)
            .unwrap_or(BackendChoice::Template)),
        BackendArg::External => ExternalConfig::chat_from_env()
            .map(BackendChoice::External)
            .with_context(|| {
                format!("--backend external requires {}", crate::backend::ENV_LLM_ENDPOINT)
            }),
    }
}

fn parse_connectivity(s: &str) -> Result<Connectivity, String> {
    match s {
        "4" => Ok(Connectivity::Four),
        "8" => Ok(Connectivity::Eight),
        _ => Err("connectivity must be 4 or 8".to_string()),
    }
}

fn parse_metrics(s: &str) -> Result<MetricSelection, String> {
    let mut selection = MetricSelection { rouge: false, meteor: false, scs: false };
    for name in s.split(',').map(str::trim).filter(|n| !n.is_empty()) {
        match name {
            "rouge" => selection.rouge = true,
            "meteor" => selection.meteor = true,
            "scs" => selection.scs = true,
            other => return Err(format!("unknown metric '{other}' (expected rouge, meteor, scs)")),
        }
    }
    if !(selection.rouge || selection.meteor || selection.scs) {
        return Err("metric list is empty".to_string());
    }
    Ok(selection)
}

#[derive(Copy, Clone, Default, ValueEnum)]
enum EmbeddingArg {
    /// Bag-of-words over the evaluated corpus.
    #[default]
    Bow,
    /// HTTP embedding endpoint from `DAMAST_EMBED_*`.
    External,
}

#[derive(Copy, Clone, Default, ValueEnum)]
enum ScsVariantArg {
    /// `cos^3 * sgn(cos)` as defined.
    #[default]
    Literal,
    /// Plain signed `cos^3`.
    Signed,
}

impl From<ScsVariantArg> for ScsVariant {
    fn from(arg: ScsVariantArg) -> Self {
        match arg {
            ScsVariantArg::Literal => ScsVariant::Literal,
            ScsVariantArg::Signed => ScsVariant::Signed,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Annotate a single mask into an output directory.
    Annotate {
        #[arg(long)]
        mask: PathBuf,
        /// Image id for the document; defaults to the file stem.
        #[arg(long)]
        id: Option<String>,
        #[command(flatten)]
        mask_args: MaskArgs,
        #[arg(long, default_value = "8", value_parser = parse_connectivity)]
        connectivity: Connectivity,
        #[arg(long, value_enum, default_value_t)]
        backend: BackendArg,
        /// Count destroyed-only scenes as at least level 1.
        #[arg(long)]
        strict_minor: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Annotate every manifest entry with a bounded worker pool.
    Batch {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per logical CPU).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        mask_args: MaskArgs,
        #[arg(long, default_value = "8", value_parser = parse_connectivity)]
        connectivity: Connectivity,
        #[arg(long, value_enum, default_value_t)]
        backend: BackendArg,
        #[arg(long)]
        strict_minor: bool,
    },
    /// Compute dataset analytics (class balance, sizes, co-occurrence, word
    /// frequency) into a JSON report.
    Stats {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write plot-ready CSV tables into this directory.
        #[arg(long)]
        csv_dir: Option<PathBuf>,
        /// Pixels required before a category counts as present in an image.
        #[arg(long, default_value_t = 1)]
        presence_threshold: u64,
        #[command(flatten)]
        mask_args: MaskArgs,
        #[arg(long, default_value = "8", value_parser = parse_connectivity)]
        connectivity: Connectivity,
    },
    /// Grade one mask and print the damage assessment.
    Grade {
        #[arg(long)]
        mask: PathBuf,
        #[command(flatten)]
        mask_args: MaskArgs,
        #[arg(long)]
        strict_minor: bool,
    },
    /// Score line-aligned prediction/reference files.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, default_value = "rouge,meteor,scs", value_parser = parse_metrics)]
        metrics: MetricSelection,
        #[arg(long, value_enum, default_value_t)]
        embedding: EmbeddingArg,
        #[arg(long, value_enum, default_value_t)]
        scs_variant: ScsVariantArg,
    },
    /// Build a dataset manifest from a directory tree.
    Manifest {
        #[arg(long)]
        root: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn grading_mode(strict_minor: bool) -> GradingMode {
    if strict_minor {
        GradingMode::StrictMinor
    } else {
        GradingMode::Literal
    }
}

/// Parses arguments and runs one command; the result is the process exit code.
pub fn run() -> anyhow::Result<u8> {
    run_with(Cli::parse())
}

fn run_with(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Annotate {
            mask,
            id,
            mask_args,
            connectivity,
            backend,
            strict_minor,
            out,
        } => {
            let load = mask_args.load_options()?;
            let grid = load_mask(&mask, &load)?;
            let image_id = id.unwrap_or_else(|| {
                mask.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mask".into())
            });
            let options = AnnotateOptions {
                image_id: image_id.clone(),
                connectivity,
                grading_mode: grading_mode(strict_minor),
                instruction: String::new(),
            };
            std::fs::create_dir_all(&out)
                .with_context(|| format!("cannot create {}", out.display()))?;
            let document = match resolve_backend(backend)? {
                BackendChoice::Template => {
                    let backend = damast_core::narration::TemplateBackend::new(options.grading_mode);
                    annotate_one(&grid, &options, &backend, false)?
                }
                BackendChoice::External(config) => {
                    let backend = ExternalChatBackend::new(config);
                    annotate_one(&grid, &options, &backend, true)?
                }
            };
            write_document(&document, &image_id, &out)?;
            println!("wrote {}", out.join(format!("{image_id}.annotation.json")).display());
            Ok(0)
        }
        Command::Batch {
            manifest,
            out,
            workers,
            mask_args,
            connectivity,
            backend,
            strict_minor,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let config = BatchConfig {
                workers,
                connectivity,
                grading_mode: grading_mode(strict_minor),
                load: mask_args.load_options()?,
                backend: resolve_backend(backend)?,
                instruction: String::new(),
            };
            let summary = batch_annotate(&manifest, &out, &config)?;
            println!("annotated {} entries, {} failed", summary.ok, summary.failed);
            Ok(u8::from(summary.failed > 0))
        }
        Command::Stats {
            manifest,
            out,
            csv_dir,
            presence_threshold,
            mask_args,
            connectivity,
        } => {
            let manifest = Manifest::load(&manifest)?;
            let report = compute_stats_report(
                &manifest,
                &mask_args.load_options()?,
                connectivity,
                presence_threshold,
            )?;
            write_json_report(&report, &out)?;
            if let Some(dir) = &csv_dir {
                write_csv_tables(&report, dir)?;
            }
            println!("wrote {}", out.display());
            Ok(0)
        }
        Command::Grade { mask, mask_args, strict_minor } => {
            let grid = load_mask(&mask, &mask_args.load_options()?)?;
            let assessment = assess(&grid.category_histogram(), grading_mode(strict_minor));
            print_json(&assessment)?;
            Ok(0)
        }
        Command::Eval { pred, reference, metrics, embedding, scs_variant } => {
            let external;
            let provider: Option<&dyn damast_core::metrics::EmbeddingProvider> = match embedding {
                EmbeddingArg::Bow => None,
                EmbeddingArg::External => {
                    let config = ExternalConfig::embedding_from_env().with_context(|| {
                        format!("--embedding external requires {}", crate::backend::ENV_EMBED_ENDPOINT)
                    })?;
                    external = ExternalEmbedding::new(config);
                    Some(&external)
                }
            };
            let report = run_eval(&pred, &reference, metrics, scs_variant.into(), provider)?;
            print_json(&report)?;
            Ok(0)
        }
        Command::Manifest { root, out } => {
            if !root.is_dir() {
                bail!("root {} is not a directory", root.display());
            }
            let (manifest, warnings) = build_manifest(&root)?;
            for warning in &warnings {
                eprintln!("warning: {warning}");
            }
            manifest.save(&out)?;
            println!("wrote {} with {} entries", out.display(), manifest.entries.len());
            Ok(0)
        }
    }
}
