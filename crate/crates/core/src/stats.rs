//! Zonal statistics and dataset-level analytics.
//!
//! Per-zone statistics pair pixel counts with instance counts; dataset-level
//! helpers compute class balance, instance-size distributions, per-image
//! class co-occurrence, and word-frequency analytics over annotation text.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Serialize, Serializer};

use crate::instances::BuildingInstance;
use crate::mask::{CategoryCounts, DamageCategory, SegmentationMask};
use crate::metrics::tokenize;
use crate::zones::{Zone, ZoneGeometry};

/// Instance counts for the three building categories.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct BuildingCounts {
    pub intact: u64,
    pub damaged: u64,
    pub destroyed: u64,
}

impl BuildingCounts {
    pub fn get(&self, category: DamageCategory) -> u64 {
        match category {
            DamageCategory::Background => 0,
            DamageCategory::Intact => self.intact,
            DamageCategory::Damaged => self.damaged,
            DamageCategory::Destroyed => self.destroyed,
        }
    }

    pub fn add(&mut self, category: DamageCategory, amount: u64) {
        match category {
            DamageCategory::Background => {}
            DamageCategory::Intact => self.intact += amount,
            DamageCategory::Damaged => self.damaged += amount,
            DamageCategory::Destroyed => self.destroyed += amount,
        }
    }

    pub fn total(&self) -> u64 {
        self.intact + self.damaged + self.destroyed
    }
}

/// Statistics scope: one zone or the whole image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Global,
    Zone(Zone),
}

impl Scope {
    pub fn name(self) -> &'static str {
        match self {
            Scope::Global => "global",
            Scope::Zone(zone) => zone.name(),
        }
    }
}

impl Serialize for Scope {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

/// Dense statistics for one scope: pixel counts for all categories plus
/// instance counts for the building categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZoneStats {
    pub scope: Scope,
    pub pixel_counts: CategoryCounts,
    pub instance_counts: BuildingCounts,
}

impl ZoneStats {
    pub fn empty(scope: Scope) -> Self {
        Self {
            scope,
            pixel_counts: CategoryCounts::default(),
            instance_counts: BuildingCounts::default(),
        }
    }
}

/// Per-zone statistics plus their five-zone sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZonalStatistics {
    /// One entry per zone, in [`Zone::ALL`] order.
    pub zones: [ZoneStats; 5],
    pub global: ZoneStats,
}

impl ZonalStatistics {
    pub fn zone(&self, zone: Zone) -> &ZoneStats {
        &self.zones[Zone::ALL.iter().position(|&z| z == zone).unwrap()]
    }
}

/// Errors from statistics computation.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StatsError {
    #[error("mask is {mask_height}x{mask_width} but geometry is {geom_height}x{geom_width}")]
    DimensionMismatch {
        mask_height: u32,
        mask_width: u32,
        geom_height: u32,
        geom_width: u32,
    },
    #[error("instance {id} has no assigned zone")]
    ZoneNotAssigned { id: u32 },
    #[error("split contains no building pixels")]
    NoBuildingPixels,
    #[error("co-occurrence requires at least one image")]
    NoImages,
}

/// Tallies pixel counts by zone membership and instance counts by each
/// instance's majority-overlap zone; the global block is the five-zone sum.
pub fn compute_zone_stats(
    mask: &SegmentationMask,
    instances: &[BuildingInstance],
    geom: &ZoneGeometry,
) -> Result<ZonalStatistics, StatsError> {
    if mask.height() != geom.height || mask.width() != geom.width {
        return Err(StatsError::DimensionMismatch {
            mask_height: mask.height(),
            mask_width: mask.width(),
            geom_height: geom.height,
            geom_width: geom.width,
        });
    }

    let mut zones: [ZoneStats; 5] = [
        ZoneStats::empty(Scope::Zone(Zone::ALL[0])),
        ZoneStats::empty(Scope::Zone(Zone::ALL[1])),
        ZoneStats::empty(Scope::Zone(Zone::ALL[2])),
        ZoneStats::empty(Scope::Zone(Zone::ALL[3])),
        ZoneStats::empty(Scope::Zone(Zone::ALL[4])),
    ];
    let index_of = |zone: Zone| Zone::ALL.iter().position(|&z| z == zone).unwrap();

    for v in 0..mask.height() {
        for u in 0..mask.width() {
            let zone = geom.zone_of_pixel_unchecked(u, v);
            zones[index_of(zone)].pixel_counts.add(mask.get_unchecked(u, v), 1);
        }
    }

    for instance in instances {
        let zone = instance.zone.ok_or(StatsError::ZoneNotAssigned { id: instance.id })?;
        zones[index_of(zone)].instance_counts.add(instance.category, 1);
    }

    let mut global = ZoneStats::empty(Scope::Global);
    for stats in &zones {
        for category in DamageCategory::ALL {
            global.pixel_counts.add(category, stats.pixel_counts.get(category));
        }
        for category in DamageCategory::BUILDING {
            global.instance_counts.add(category, stats.instance_counts.get(category));
        }
    }

    Ok(ZonalStatistics { zones, global })
}

/// Building-pixel fractions by category; they sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassBalance {
    pub intact: f64,
    pub damaged: f64,
    pub destroyed: f64,
}

/// Fractions of building pixels per category over a set of mask histograms.
pub fn class_balance(
    histograms: impl IntoIterator<Item = CategoryCounts>,
) -> Result<ClassBalance, StatsError> {
    let mut sums = CategoryCounts::default();
    for hist in histograms {
        for category in DamageCategory::ALL {
            sums.add(category, hist.get(category));
        }
    }
    let building = sums.building_total();
    if building == 0 {
        return Err(StatsError::NoBuildingPixels);
    }
    let building = building as f64;
    Ok(ClassBalance {
        intact: sums.intact as f64 / building,
        damaged: sums.damaged as f64 / building,
        destroyed: sums.destroyed as f64 / building,
    })
}

/// Five-number summary of instance pixel areas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeSummary {
    pub count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quartiles: Option<Quartiles>,
}

/// Instance-size summaries per building category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeDistribution {
    pub intact: SizeSummary,
    pub damaged: SizeSummary,
    pub destroyed: SizeSummary,
}

impl SizeDistribution {
    pub fn get(&self, category: DamageCategory) -> Option<&SizeSummary> {
        match category {
            DamageCategory::Background => None,
            DamageCategory::Intact => Some(&self.intact),
            DamageCategory::Damaged => Some(&self.damaged),
            DamageCategory::Destroyed => Some(&self.destroyed),
        }
    }
}

/// Linear-interpolation quantile (type 7) of a sorted sample.
fn quantile_sorted(sorted: &[u64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let pos = (n - 1) as f64 * q;
    let lo = pos as usize;
    let frac = pos - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1] as f64;
    }
    sorted[lo] as f64 + frac * (sorted[lo + 1] as f64 - sorted[lo] as f64)
}

fn summarize_areas(mut areas: Vec<u64>) -> SizeSummary {
    if areas.is_empty() {
        return SizeSummary { count: 0, quartiles: None };
    }
    areas.sort_unstable();
    SizeSummary {
        count: areas.len() as u64,
        quartiles: Some(Quartiles {
            min: areas[0] as f64,
            q1: quantile_sorted(&areas, 0.25),
            median: quantile_sorted(&areas, 0.5),
            q3: quantile_sorted(&areas, 0.75),
            max: areas[areas.len() - 1] as f64,
        }),
    }
}

/// Per-category summaries of instance pixel areas.
pub fn size_distribution<'a>(
    instances: impl IntoIterator<Item = &'a BuildingInstance>,
) -> SizeDistribution {
    let mut areas: [Vec<u64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for instance in instances {
        match instance.category {
            DamageCategory::Background => {}
            DamageCategory::Intact => areas[0].push(instance.pixel_count()),
            DamageCategory::Damaged => areas[1].push(instance.pixel_count()),
            DamageCategory::Destroyed => areas[2].push(instance.pixel_count()),
        }
    }
    let [intact, damaged, destroyed] = areas;
    SizeDistribution {
        intact: summarize_areas(intact),
        damaged: summarize_areas(damaged),
        destroyed: summarize_areas(destroyed),
    }
}

/// Conditional co-occurrence probabilities between building categories.
///
/// Row and column order is intact, damaged, destroyed; `conditional[r][c]`
/// is `P(column c present | row r present)` over images, and `support[r]`
/// counts the images where row `r` is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CooccurrenceMatrix {
    pub support: [u64; 3],
    pub conditional: [[f64; 3]; 3],
}

/// Per-image class co-occurrence over mask histograms. A category is present
/// in an image when it covers at least `presence_threshold` pixels.
pub fn cooccurrence(
    histograms: impl IntoIterator<Item = CategoryCounts>,
    presence_threshold: u64,
) -> Result<CooccurrenceMatrix, StatsError> {
    let threshold = presence_threshold.max(1);
    let mut support = [0u64; 3];
    let mut both = [[0u64; 3]; 3];
    let mut images = 0u64;
    for hist in histograms {
        images += 1;
        let present: Vec<bool> = DamageCategory::BUILDING
            .iter()
            .map(|&c| hist.get(c) >= threshold)
            .collect();
        for r in 0..3 {
            if !present[r] {
                continue;
            }
            support[r] += 1;
            for c in 0..3 {
                if present[c] {
                    both[r][c] += 1;
                }
            }
        }
    }
    if images == 0 {
        return Err(StatsError::NoImages);
    }
    let mut conditional = [[0.0f64; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            if support[r] > 0 {
                conditional[r][c] = both[r][c] as f64 / support[r] as f64;
            }
        }
    }
    Ok(CooccurrenceMatrix { support, conditional })
}

/// Spatial-keyword counts extracted from a word-frequency table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SpatialKeywords {
    pub top: u64,
    pub bottom: u64,
    pub left: u64,
    pub right: u64,
    pub central: u64,
}

/// Token counts over a text corpus plus the spatial-keyword subreport.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct WordFrequency {
    pub counts: BTreeMap<String, u64>,
    pub spatial: SpatialKeywords,
}

/// Exact token counts: lowercase, split on non-alphanumeric characters.
pub fn word_frequency<'a>(corpus: impl IntoIterator<Item = &'a str>) -> WordFrequency {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for text in corpus {
        for token in tokenize(text) {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let count = |key: &str| counts.get(key).copied().unwrap_or(0);
    let spatial = SpatialKeywords {
        top: count("top"),
        bottom: count("bottom"),
        left: count("left"),
        right: count("right"),
        central: count("central"),
    };
    WordFrequency { counts, spatial }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{extract_instances, Connectivity};
    use crate::zones::ZoneGeometry;
    use alloc::vec;

    fn assign_all(mask: &SegmentationMask, geom: &ZoneGeometry) -> Vec<BuildingInstance> {
        let mut instances = extract_instances(mask, Connectivity::Eight);
        for instance in &mut instances {
            instance.zone = Some(geom.assign_zone(&instance.pixels).unwrap());
        }
        instances
    }

    fn blob_mask(height: u32, width: u32, cells: &[(u32, u32, DamageCategory)]) -> SegmentationMask {
        SegmentationMask::from_fn(height, width, |u, v| {
            cells
                .iter()
                .find(|&&(cu, cv, _)| cu == u && cv == v)
                .map(|&(_, _, c)| c)
                .unwrap_or(DamageCategory::Background)
        })
        .unwrap()
    }

    #[test]
    fn single_blob_in_top_zone() {
        // 10 intact pixels fully inside the top zone of a 100x100 image.
        let cells: Vec<(u32, u32, DamageCategory)> =
            (0..10).map(|i| (30 + i, 5, DamageCategory::Intact)).collect();
        let mask = blob_mask(100, 100, &cells);
        let geom = ZoneGeometry::new(100, 100).unwrap();
        let instances = assign_all(&mask, &geom);
        let stats = compute_zone_stats(&mask, &instances, &geom).unwrap();

        let top = stats.zone(Zone::Top);
        assert_eq!(top.pixel_counts.intact, 10);
        assert_eq!(top.instance_counts.intact, 1);
        for zone in [Zone::Central, Zone::Bottom, Zone::Left, Zone::Right] {
            assert_eq!(stats.zone(zone).instance_counts.total(), 0);
            assert_eq!(stats.zone(zone).pixel_counts.building_total(), 0);
        }
        assert_eq!(stats.global.instance_counts.intact, 1);
        assert_eq!(stats.global.pixel_counts.total(), 10_000);
    }

    #[test]
    fn empty_mask_is_all_zeros() {
        let mask = SegmentationMask::from_codes(8, 8, &[0; 64]).unwrap();
        let geom = ZoneGeometry::new(8, 8).unwrap();
        let stats = compute_zone_stats(&mask, &[], &geom).unwrap();
        assert_eq!(stats.global.pixel_counts.background, 64);
        assert_eq!(stats.global.instance_counts.total(), 0);
    }

    #[test]
    fn straddling_blob_splits_pixels_but_not_instances() {
        // Vertical strip: 4 pixels in top (v=21..25), 6 in central (v=25..31).
        let cells: Vec<(u32, u32, DamageCategory)> =
            (21..31).map(|v| (50, v, DamageCategory::Intact)).collect();
        let mask = blob_mask(100, 100, &cells);
        let geom = ZoneGeometry::new(100, 100).unwrap();
        let instances = assign_all(&mask, &geom);
        let stats = compute_zone_stats(&mask, &instances, &geom).unwrap();

        assert_eq!(stats.zone(Zone::Top).pixel_counts.intact, 4);
        assert_eq!(stats.zone(Zone::Central).pixel_counts.intact, 6);
        assert_eq!(stats.zone(Zone::Top).instance_counts.intact, 0);
        assert_eq!(stats.zone(Zone::Central).instance_counts.intact, 1);
    }

    #[test]
    fn pixel_counts_conserve_histogram() {
        let mask = SegmentationMask::from_fn(37, 53, |u, v| {
            DamageCategory::from_code(((u * 7 + v * 13) % 4) as u8).unwrap()
        })
        .unwrap();
        let geom = ZoneGeometry::new(37, 53).unwrap();
        let instances = assign_all(&mask, &geom);
        let stats = compute_zone_stats(&mask, &instances, &geom).unwrap();
        let hist = mask.category_histogram();
        for category in DamageCategory::ALL {
            let by_zone: u64 =
                stats.zones.iter().map(|z| z.pixel_counts.get(category)).sum();
            assert_eq!(by_zone, hist.get(category), "{}", category.name());
            assert_eq!(stats.global.pixel_counts.get(category), hist.get(category));
        }
        let total_instances: u64 =
            stats.zones.iter().map(|z| z.instance_counts.total()).sum();
        assert_eq!(total_instances, instances.len() as u64);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mask = SegmentationMask::from_codes(4, 4, &[0; 16]).unwrap();
        let geom = ZoneGeometry::new(5, 4).unwrap();
        assert!(matches!(
            compute_zone_stats(&mask, &[], &geom),
            Err(StatsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn class_balance_fractions() {
        let hist = CategoryCounts { background: 100, intact: 8, damaged: 4, destroyed: 4 };
        let balance = class_balance([hist]).unwrap();
        assert_eq!(balance.intact, 0.50);
        assert_eq!(balance.damaged, 0.25);
        assert_eq!(balance.destroyed, 0.25);
        assert!((balance.intact + balance.damaged + balance.destroyed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn class_balance_all_intact() {
        let hist = CategoryCounts { background: 0, intact: 9, damaged: 0, destroyed: 0 };
        let balance = class_balance([hist, hist]).unwrap();
        assert_eq!((balance.intact, balance.damaged, balance.destroyed), (1.0, 0.0, 0.0));
    }

    #[test]
    fn class_balance_requires_building_pixels() {
        let hist = CategoryCounts { background: 10, ..Default::default() };
        assert_eq!(class_balance([hist]), Err(StatsError::NoBuildingPixels));
    }

    #[test]
    fn quartiles_interpolate_linearly() {
        let summary = summarize_areas(vec![1, 2, 3, 4, 5]);
        let q = summary.quartiles.unwrap();
        assert_eq!((q.q1, q.median, q.q3), (2.0, 3.0, 4.0));
        assert_eq!((q.min, q.max), (1.0, 5.0));

        let single = summarize_areas(vec![7]);
        let q = single.quartiles.unwrap();
        assert_eq!((q.min, q.q1, q.median, q.q3, q.max), (7.0, 7.0, 7.0, 7.0, 7.0));

        let even = summarize_areas(vec![1, 2, 3, 4]);
        let q = even.quartiles.unwrap();
        assert_eq!(q.q1, 1.75);
        assert_eq!(q.median, 2.5);
        assert_eq!(q.q3, 3.25);

        assert_eq!(summarize_areas(vec![]).count, 0);
        assert!(summarize_areas(vec![]).quartiles.is_none());
    }

    #[test]
    fn cooccurrence_counts_presence_per_image() {
        let with_both = CategoryCounts { damaged: 5, destroyed: 2, ..Default::default() };
        let damaged_only = CategoryCounts { damaged: 1, ..Default::default() };
        let matrix = cooccurrence([with_both, damaged_only], 1).unwrap();
        // Rows: intact=0, damaged=1, destroyed=2.
        assert_eq!(matrix.support, [0, 2, 1]);
        assert_eq!(matrix.conditional[1][2], 0.5); // P(destroyed | damaged)
        assert_eq!(matrix.conditional[2][1], 1.0); // P(damaged | destroyed)
        assert_eq!(matrix.conditional[1][1], 1.0);
        assert_eq!(matrix.conditional[0][0], 0.0); // zero support row
    }

    #[test]
    fn cooccurrence_single_intact_image() {
        let hist = CategoryCounts { intact: 3, ..Default::default() };
        let matrix = cooccurrence([hist], 1).unwrap();
        assert_eq!(matrix.conditional[0][0], 1.0);
        assert_eq!(matrix.support, [1, 0, 0]);
        assert_eq!(cooccurrence(core::iter::empty(), 1), Err(StatsError::NoImages));
    }

    #[test]
    fn word_frequency_counts_tokens() {
        let freq = word_frequency(["top zone and bottom zone"]);
        assert_eq!(freq.counts.get("top"), Some(&1));
        assert_eq!(freq.counts.get("bottom"), Some(&1));
        assert_eq!(freq.counts.get("zone"), Some(&2));
        assert_eq!(freq.counts.get("and"), Some(&1));
        assert_eq!(freq.spatial.top, 1);
        assert_eq!(freq.spatial.bottom, 1);

        assert!(word_frequency([]).counts.is_empty());

        let folded = word_frequency(["Central central CENTRAL"]);
        assert_eq!(folded.counts.get("central"), Some(&3));
        assert_eq!(folded.spatial.central, 3);
    }
}
