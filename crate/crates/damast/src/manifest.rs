//! Dataset manifests: triplet discovery, JSON serialization, and split
//! consistency checks.
//!
//! A manifest lists mask files (with optional pre/post imagery matched by
//! filename stem) under train/val/test split tags. Discovery is a
//! deterministic lexicographic traversal; unmatched masks produce warnings,
//! never silent drops.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use damast_core::stats::{class_balance, ClassBalance, StatsError};
use serde::{Deserialize, Serialize};

use crate::io::{load_mask, IoError, LoadOptions};

/// Dataset split tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One dataset entry: a mask plus optional bi-temporal imagery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pre: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub post: Option<PathBuf>,
    pub split: Split,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

/// Errors from manifest construction and loading.
#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read directory {}: {source}", path.display())]
    ReadDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read {}: {source}", path.display())]
    ReadFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    WriteFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest {}: {source}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("duplicate id '{id}' (stems must be unique across splits)")]
    DuplicateId { id: String },
    #[error("mask path does not exist: {}", path.display())]
    MissingMask { path: PathBuf },
    #[error("split '{split}' has no entries")]
    MissingSplit { split: &'static str },
    #[error("split '{split}': {source}")]
    SplitStats {
        split: &'static str,
        #[source]
        source: StatsError,
    },
    #[error(transparent)]
    Io(#[from] IoError),
}

impl Manifest {
    /// Loads a manifest, resolving relative entry paths against its parent
    /// directory.
    pub fn load(path: &Path) -> Result<Self, ManifestError> {
        let text = fs::read_to_string(path)
            .map_err(|source| ManifestError::ReadFile { path: path.into(), source })?;
        let mut manifest: Manifest = serde_json::from_str(&text)
            .map_err(|source| ManifestError::Parse { path: path.into(), source })?;
        if let Some(base) = path.parent() {
            let resolve = |p: &Path| if p.is_relative() { base.join(p) } else { p.to_path_buf() };
            for entry in &mut manifest.entries {
                entry.mask = resolve(&entry.mask);
                entry.pre = entry.pre.as_deref().map(resolve);
                entry.post = entry.post.as_deref().map(resolve);
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<(), ManifestError> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text)
            .map_err(|source| ManifestError::WriteFile { path: path.into(), source })
    }

    /// Checks id uniqueness and that every mask path exists.
    pub fn validate(&self) -> Result<(), ManifestError> {
        let mut seen = BTreeSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.id.as_str()) {
                return Err(ManifestError::DuplicateId { id: entry.id.clone() });
            }
            if !entry.mask.exists() {
                return Err(ManifestError::MissingMask { path: entry.mask.clone() });
            }
        }
        Ok(())
    }

    pub fn split_entries(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }
}

const MASK_EXTENSIONS: [&str; 2] = ["png", "raw"];
const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "tif", "tiff"];

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>, ManifestError> {
    let mut out = Vec::new();
    let reader =
        fs::read_dir(path).map_err(|source| ManifestError::ReadDir { path: path.into(), source })?;
    for entry in reader {
        let entry = entry.map_err(|source| ManifestError::ReadDir { path: path.into(), source })?;
        out.push(entry.path());
    }
    out.sort();
    Ok(out)
}

fn match_by_stem(dir: &Path, stem: &str) -> Option<PathBuf> {
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{stem}.{ext}")))
        .find(|p| p.is_file())
}

fn scan_split(
    dir: &Path,
    split: Split,
    entries: &mut Vec<ManifestEntry>,
    warnings: &mut Vec<String>,
) -> Result<(), ManifestError> {
    let masks_dir = if dir.join("masks").is_dir() { dir.join("masks") } else { dir.to_path_buf() };
    let pre_dir = dir.join("pre");
    let post_dir = dir.join("post");

    for path in sorted_dir(&masks_dir)? {
        if !path.is_file() {
            continue;
        }
        let extension = path.extension().and_then(|e| e.to_str()).unwrap_or("");
        if !MASK_EXTENSIONS.contains(&extension.to_ascii_lowercase().as_str()) {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) => s.to_string(),
            None => continue,
        };
        let pre = pre_dir.is_dir().then(|| match_by_stem(&pre_dir, &stem)).flatten();
        let post = post_dir.is_dir().then(|| match_by_stem(&post_dir, &stem)).flatten();
        if pre_dir.is_dir() && pre.is_none() {
            warnings.push(format!("mask '{stem}': no matching pre image in {}", pre_dir.display()));
        }
        if post_dir.is_dir() && post.is_none() {
            warnings.push(format!("mask '{stem}': no matching post image in {}", post_dir.display()));
        }
        entries.push(ManifestEntry { id: stem, mask: path, pre, post, split });
    }
    Ok(())
}

/// Builds a manifest from a directory tree.
///
/// Layouts: either `root/{train,val,test}/...` (split per subdirectory) or a
/// flat directory tagged as `train`. Within a scanned directory, masks come
/// from a `masks/` subdirectory when present (with `pre/` and `post/` imagery
/// matched by stem), otherwise from the directory itself.
pub fn build_manifest(root: &Path) -> Result<(Manifest, Vec<String>), ManifestError> {
    let mut entries = Vec::new();
    let mut warnings = Vec::new();

    let split_dirs: Vec<(Split, PathBuf)> = Split::ALL
        .iter()
        .map(|&s| (s, root.join(s.name())))
        .filter(|(_, p)| p.is_dir())
        .collect();

    if split_dirs.is_empty() {
        scan_split(root, Split::Train, &mut entries, &mut warnings)?;
    } else {
        for (split, dir) in split_dirs {
            scan_split(&dir, split, &mut entries, &mut warnings)?;
        }
    }

    entries.sort_by(|a, b| (a.split, &a.id).cmp(&(b.split, &b.id)));
    if entries.is_empty() {
        warnings.push(format!("no masks found under {}", root.display()));
    }

    let manifest = Manifest { entries };
    manifest.validate()?;
    Ok((manifest, warnings))
}

/// Per-split class balance plus the maximum fraction gap across splits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConsistency {
    pub train: ClassBalance,
    pub val: ClassBalance,
    pub test: ClassBalance,
    /// Largest absolute difference of any category fraction across splits.
    pub max_gap: f64,
}

/// Runs class balance per split and reports the worst cross-split gap.
/// All three splits must be present.
pub fn check_split_consistency(
    manifest: &Manifest,
    options: &LoadOptions,
) -> Result<SplitConsistency, ManifestError> {
    let mut balances = Vec::with_capacity(3);
    for split in Split::ALL {
        let mut histograms = Vec::new();
        for entry in manifest.split_entries(split) {
            let mask = load_mask(&entry.mask, options)?;
            histograms.push(mask.category_histogram());
        }
        if histograms.is_empty() {
            return Err(ManifestError::MissingSplit { split: split.name() });
        }
        let balance = class_balance(histograms)
            .map_err(|source| ManifestError::SplitStats { split: split.name(), source })?;
        balances.push(balance);
    }

    let mut max_gap = 0.0f64;
    for extract in [
        |b: &ClassBalance| b.intact,
        |b: &ClassBalance| b.damaged,
        |b: &ClassBalance| b.destroyed,
    ] {
        let values: Vec<f64> = balances.iter().map(extract).collect();
        let hi = values.iter().cloned().fold(f64::MIN, f64::max);
        let lo = values.iter().cloned().fold(f64::MAX, f64::min);
        max_gap = max_gap.max(hi - lo);
    }

    Ok(SplitConsistency {
        train: balances[0],
        val: balances[1],
        test: balances[2],
        max_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::save_mask_indexed_png;
    use damast_core::mask::SegmentationMask;

    fn write_mask(path: &Path, codes: &[u8], side: u32) {
        let mask = SegmentationMask::from_codes(side, side, codes).unwrap();
        save_mask_indexed_png(&mask, path).unwrap();
    }

    #[test]
    fn flat_directory_scans_in_order() {
        let dir = tempfile::tempdir().unwrap();
        write_mask(&dir.path().join("b.png"), &[1, 0, 0, 0], 2);
        write_mask(&dir.path().join("a.png"), &[1, 0, 0, 0], 2);
        let (manifest, warnings) = build_manifest(dir.path()).unwrap();
        let ids: Vec<&str> = manifest.entries.iter().map(|e| e.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(manifest.entries.iter().all(|e| e.split == Split::Train));
        assert!(warnings.is_empty());
    }

    #[test]
    fn empty_directory_warns() {
        let dir = tempfile::tempdir().unwrap();
        let (manifest, warnings) = build_manifest(dir.path()).unwrap();
        assert!(manifest.entries.is_empty());
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("no masks found"));
    }

    #[test]
    fn duplicate_stems_across_splits_error() {
        let dir = tempfile::tempdir().unwrap();
        for split in ["train", "val", "test"] {
            fs::create_dir(dir.path().join(split)).unwrap();
        }
        write_mask(&dir.path().join("train/x.png"), &[1, 0, 0, 0], 2);
        write_mask(&dir.path().join("val/x.png"), &[1, 0, 0, 0], 2);
        write_mask(&dir.path().join("test/y.png"), &[1, 0, 0, 0], 2);
        let err = build_manifest(dir.path()).unwrap_err();
        assert!(matches!(err, ManifestError::DuplicateId { ref id } if id == "x"), "{err}");
    }

    #[test]
    fn triplet_layout_matches_stems_and_warns_on_gaps() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("masks")).unwrap();
        fs::create_dir_all(dir.path().join("pre")).unwrap();
        fs::create_dir_all(dir.path().join("post")).unwrap();
        write_mask(&dir.path().join("masks/s1.png"), &[1, 0, 0, 0], 2);
        write_mask(&dir.path().join("pre/s1.png"), &[0, 0, 0, 0], 2);
        // no post image for s1
        let (manifest, warnings) = build_manifest(dir.path()).unwrap();
        assert_eq!(manifest.entries.len(), 1);
        assert!(manifest.entries[0].pre.is_some());
        assert!(manifest.entries[0].post.is_none());
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("no matching post image"));
    }

    #[test]
    fn manifest_round_trips_through_json() {
        let dir = tempfile::tempdir().unwrap();
        write_mask(&dir.path().join("a.png"), &[1, 0, 0, 0], 2);
        let (manifest, _) = build_manifest(dir.path()).unwrap();
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let loaded = Manifest::load(&path).unwrap();
        assert_eq!(loaded, manifest);
    }

    #[test]
    fn loading_validates_mask_existence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        fs::write(
            &path,
            r#"{"entries":[{"id":"ghost","mask":"ghost.png","split":"train"}]}"#,
        )
        .unwrap();
        let err = Manifest::load(&path).unwrap_err();
        assert!(matches!(err, ManifestError::MissingMask { .. }), "{err}");
    }

    #[test]
    fn split_consistency_identical_splits_gap_zero() {
        let dir = tempfile::tempdir().unwrap();
        for split in ["train", "val", "test"] {
            fs::create_dir(dir.path().join(split)).unwrap();
            write_mask(
                &dir.path().join(split).join(format!("{split}_m.png")),
                &[1, 1, 2, 3],
                2,
            );
        }
        let (manifest, _) = build_manifest(dir.path()).unwrap();
        let report = check_split_consistency(&manifest, &LoadOptions::default()).unwrap();
        assert_eq!(report.max_gap, 0.0);
        assert_eq!(report.train.intact, 0.5);
    }

    #[test]
    fn split_consistency_detects_drift() {
        let dir = tempfile::tempdir().unwrap();
        for split in ["train", "val", "test"] {
            fs::create_dir(dir.path().join(split)).unwrap();
        }
        write_mask(&dir.path().join("train/a.png"), &[1, 1, 1, 1], 2);
        write_mask(&dir.path().join("val/b.png"), &[1, 1, 1, 1], 2);
        write_mask(&dir.path().join("test/c.png"), &[3, 3, 3, 3], 2);
        let (manifest, _) = build_manifest(dir.path()).unwrap();
        let report = check_split_consistency(&manifest, &LoadOptions::default()).unwrap();
        assert_eq!(report.max_gap, 1.0);
    }

    #[test]
    fn split_consistency_requires_all_splits() {
        let dir = tempfile::tempdir().unwrap();
        write_mask(&dir.path().join("only.png"), &[1, 0, 0, 0], 2);
        let (manifest, _) = build_manifest(dir.path()).unwrap();
        let err = check_split_consistency(&manifest, &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, ManifestError::MissingSplit { split: "val" }), "{err}");
    }
}
