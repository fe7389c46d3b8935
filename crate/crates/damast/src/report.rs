//! Dataset analytics report: class balance per split, instance-size
//! distributions, class co-occurrence, and word frequency over the
//! template-generated annotation text. Emitted as one JSON document plus
//! optional plot-ready CSV tables.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use damast_core::grading::{assess, GradingMode};
use damast_core::instances::Connectivity;
use damast_core::metrics::{
    evaluate_corpus, BowEmbedding, CorpusReport, EmbeddingProvider, MetricSelection, MetricsError,
    ScsVariant,
};
use damast_core::narration::{
    build_prompt, compile_counting, compile_summary, generate_description, TemplateBackend,
};
use damast_core::pipeline::analyze_mask;
use damast_core::stats::{
    class_balance, cooccurrence, size_distribution, word_frequency, ClassBalance,
    CooccurrenceMatrix, SizeDistribution, WordFrequency,
};
use damast_core::zones::Zone;
use serde::Serialize;

use crate::io::{load_mask, LoadOptions};
use crate::manifest::{Manifest, ManifestError, Split};

/// The four analytics blocks over one manifest.
#[derive(Debug, Clone, Serialize)]
pub struct StatsReport {
    pub masks: usize,
    pub presence_threshold: u64,
    /// Building-pixel fractions per split present in the manifest.
    pub class_balance: BTreeMap<&'static str, ClassBalance>,
    /// Largest cross-split difference of any category fraction; present only
    /// when all three splits are.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_split_gap: Option<f64>,
    pub size_distribution: SizeDistribution,
    pub cooccurrence: CooccurrenceMatrix,
    pub word_frequency: WordFrequency,
}

/// Errors from report generation.
#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("split '{split}': {source}")]
    Split {
        split: &'static str,
        #[source]
        source: damast_core::stats::StatsError,
    },
    #[error(transparent)]
    Stats(#[from] damast_core::stats::StatsError),
    #[error("pipeline failed for '{id}': {source}")]
    Pipeline {
        id: String,
        #[source]
        source: damast_core::pipeline::PipelineError,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Computes all four analytics blocks for a manifest.
///
/// Word frequency runs over the deterministic template narration (zone
/// descriptions, counting text, and summary) of every mask.
pub fn compute_stats_report(
    manifest: &Manifest,
    load: &LoadOptions,
    connectivity: Connectivity,
    presence_threshold: u64,
) -> Result<StatsReport, ReportError> {
    let backend = TemplateBackend::default();
    let mut histograms_by_split: BTreeMap<&'static str, Vec<_>> = BTreeMap::new();
    let mut histograms = Vec::new();
    let mut instances = Vec::new();
    let mut corpus = Vec::new();

    for entry in &manifest.entries {
        let mask = load_mask(&entry.mask, load)?;
        let histogram = mask.category_histogram();
        histograms_by_split.entry(entry.split.name()).or_default().push(histogram);
        histograms.push(histogram);

        let analysis = analyze_mask(&mask, connectivity)
            .map_err(|source| ReportError::Pipeline { id: entry.id.clone(), source })?;
        for zone in Zone::ALL {
            let prompt = build_prompt(analysis.zonal.zone(zone), "");
            let text = generate_description(&prompt, &backend)
                .map_err(|source| ReportError::Pipeline { id: entry.id.clone(), source: source.into() })?;
            corpus.push(text);
        }
        corpus.push(compile_counting(&analysis.zonal));
        let assessment = assess(&analysis.zonal.global.pixel_counts, GradingMode::default());
        corpus.push(compile_summary(&analysis.zonal, &assessment));
        instances.extend(analysis.instances);
    }

    let mut balance = BTreeMap::new();
    for split in Split::ALL {
        if let Some(split_histograms) = histograms_by_split.remove(split.name()) {
            let fractions = class_balance(split_histograms)
                .map_err(|source| ReportError::Split { split: split.name(), source })?;
            balance.insert(split.name(), fractions);
        }
    }
    let max_split_gap = (balance.len() == 3).then(|| {
        let mut gap = 0.0f64;
        for extract in [
            |b: &ClassBalance| b.intact,
            |b: &ClassBalance| b.damaged,
            |b: &ClassBalance| b.destroyed,
        ] {
            let values: Vec<f64> = balance.values().map(extract).collect();
            let hi = values.iter().cloned().fold(f64::MIN, f64::max);
            let lo = values.iter().cloned().fold(f64::MAX, f64::min);
            gap = gap.max(hi - lo);
        }
        gap
    });

    Ok(StatsReport {
        masks: manifest.entries.len(),
        presence_threshold,
        class_balance: balance,
        max_split_gap,
        size_distribution: size_distribution(&instances),
        cooccurrence: cooccurrence(histograms, presence_threshold)?,
        word_frequency: word_frequency(corpus.iter().map(|s| s.as_str())),
    })
}

pub fn write_json_report<T: Serialize>(report: &T, path: &Path) -> Result<(), ReportError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|source| ReportError::Write { path: path.into(), source })
}

/// Writes the plot-ready CSV tables beside the JSON report.
pub fn write_csv_tables(report: &StatsReport, dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Write { path: dir.into(), source })?;
    let write = |name: &str, body: String| -> Result<(), ReportError> {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| ReportError::Write { path, source })
    };

    let mut balance = String::from("split,intact,damaged,destroyed\n");
    for (split, fractions) in &report.class_balance {
        balance.push_str(&format!(
            "{split},{},{},{}\n",
            fractions.intact, fractions.damaged, fractions.destroyed
        ));
    }
    write("class_balance.csv", balance)?;

    let mut sizes = String::from("category,count,min,q1,median,q3,max\n");
    for (name, summary) in [
        ("intact", &report.size_distribution.intact),
        ("damaged", &report.size_distribution.damaged),
        ("destroyed", &report.size_distribution.destroyed),
    ] {
        match &summary.quartiles {
            Some(q) => sizes.push_str(&format!(
                "{name},{},{},{},{},{},{}\n",
                summary.count, q.min, q.q1, q.median, q.q3, q.max
            )),
            None => sizes.push_str(&format!("{name},0,,,,,\n")),
        }
    }
    write("size_distribution.csv", sizes)?;

    let categories = ["intact", "damaged", "destroyed"];
    let mut matrix = String::from("row,intact,damaged,destroyed,support\n");
    for (r, row_name) in categories.iter().enumerate() {
        let row = report.cooccurrence.conditional[r];
        matrix.push_str(&format!(
            "{row_name},{},{},{},{}\n",
            row[0], row[1], row[2], report.cooccurrence.support[r]
        ));
    }
    write("cooccurrence.csv", matrix)?;

    let mut frequency = String::from("token,count\n");
    let mut tokens: Vec<(&String, &u64)> = report.word_frequency.counts.iter().collect();
    tokens.sort_by(|a, b| b.1.cmp(a.1).then(a.0.cmp(b.0)));
    for (token, count) in tokens {
        frequency.push_str(&format!("{token},{count}\n"));
    }
    write("word_frequency.csv", frequency)?;

    let spatial = &report.word_frequency.spatial;
    let mut keywords = String::from("keyword,count\n");
    for (keyword, count) in [
        ("top", spatial.top),
        ("bottom", spatial.bottom),
        ("left", spatial.left),
        ("right", spatial.right),
        ("central", spatial.central),
    ] {
        keywords.push_str(&format!("{keyword},{count}\n"));
    }
    write("spatial_keywords.csv", keywords)?;
    Ok(())
}

/// Scores line-aligned prediction/reference files.
pub fn run_eval(
    pred_path: &Path,
    ref_path: &Path,
    selection: MetricSelection,
    scs_variant: ScsVariant,
    external_embedding: Option<&dyn EmbeddingProvider>,
) -> Result<CorpusReport, ReportError> {
    let read_lines = |path: &Path| -> Result<Vec<String>, ReportError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ReportError::Read { path: path.into(), source })?;
        Ok(text.lines().map(|l| l.to_string()).collect())
    };
    let predictions = read_lines(pred_path)?;
    let references = read_lines(ref_path)?;
    if predictions.len() != references.len() {
        return Err(MetricsError::PairCountMismatch {
            predictions: predictions.len(),
            references: references.len(),
        }
        .into());
    }
    if predictions.is_empty() {
        return Err(MetricsError::NoPairs.into());
    }

    let bow;
    let embedder: Option<&dyn EmbeddingProvider> = match external_embedding {
        Some(provider) => Some(provider),
        None if selection.scs => {
            let corpus = predictions.iter().chain(&references).map(|s| s.as_str());
            bow = BowEmbedding::from_corpus(corpus)?;
            Some(&bow)
        }
        None => None,
    };

    Ok(evaluate_corpus(&predictions, &references, selection, scs_variant, embedder)?)
}

/// Serializes a value as pretty JSON to stdout.
pub fn print_json<T: Serialize>(value: &T) -> std::io::Result<()> {
    let mut stdout = std::io::stdout().lock();
    let text = serde_json::to_string_pretty(value).expect("value serializes");
    writeln!(stdout, "{text}")
}
