//! Damage categories, segmentation masks, and palette decoding.
//!
//! A mask is a row-major grid of [`DamageCategory`] values indexed by
//! `(v: row, u: column)` with `v` growing downward and `u` rightward.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Per-pixel damage state. Codes are stable and round-trip with names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DamageCategory {
    Background = 0,
    Intact = 1,
    Damaged = 2,
    Destroyed = 3,
}

impl DamageCategory {
    /// All categories in code order.
    pub const ALL: [DamageCategory; 4] = [
        DamageCategory::Background,
        DamageCategory::Intact,
        DamageCategory::Damaged,
        DamageCategory::Destroyed,
    ];

    /// The three building categories (everything except `Background`).
    pub const BUILDING: [DamageCategory; 3] = [
        DamageCategory::Intact,
        DamageCategory::Damaged,
        DamageCategory::Destroyed,
    ];

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(DamageCategory::Background),
            1 => Some(DamageCategory::Intact),
            2 => Some(DamageCategory::Damaged),
            3 => Some(DamageCategory::Destroyed),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            DamageCategory::Background => "background",
            DamageCategory::Intact => "intact",
            DamageCategory::Damaged => "damaged",
            DamageCategory::Destroyed => "destroyed",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "background" => Some(DamageCategory::Background),
            "intact" => Some(DamageCategory::Intact),
            "damaged" => Some(DamageCategory::Damaged),
            "destroyed" => Some(DamageCategory::Destroyed),
            _ => None,
        }
    }

    pub fn is_building(self) -> bool {
        self != DamageCategory::Background
    }
}

/// Pixel (or instance) counts keyed by damage category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub background: u64,
    pub intact: u64,
    pub damaged: u64,
    pub destroyed: u64,
}

impl CategoryCounts {
    pub fn get(&self, category: DamageCategory) -> u64 {
        match category {
            DamageCategory::Background => self.background,
            DamageCategory::Intact => self.intact,
            DamageCategory::Damaged => self.damaged,
            DamageCategory::Destroyed => self.destroyed,
        }
    }

    pub fn add(&mut self, category: DamageCategory, amount: u64) {
        match category {
            DamageCategory::Background => self.background += amount,
            DamageCategory::Intact => self.intact += amount,
            DamageCategory::Damaged => self.damaged += amount,
            DamageCategory::Destroyed => self.destroyed += amount,
        }
    }

    /// Sum over all four categories.
    pub fn total(&self) -> u64 {
        self.background + self.intact + self.damaged + self.destroyed
    }

    /// Sum over the three building categories.
    pub fn building_total(&self) -> u64 {
        self.intact + self.damaged + self.destroyed
    }
}

/// Errors from mask construction and decoding.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MaskError {
    #[error("mask dimensions must be at least 1x1 (got {height}x{width})")]
    EmptyDimensions { height: u32, width: u32 },
    #[error("buffer holds {got} values, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value {value} outside category range at ({v},{u})")]
    ValueOutOfRange { value: u8, u: u32, v: u32 },
    #[error("color ({r},{g},{b}) has no palette mapping at ({v},{u})")]
    UnmappedColor { r: u8, g: u8, b: u8, u: u32, v: u32 },
    #[error("palette color ({r},{g},{b}) is mapped to more than one category")]
    DuplicateColor { r: u8, g: u8, b: u8 },
    #[error("invalid palette entry '{line}'")]
    InvalidPaletteEntry { line: String },
}

/// Immutable H×W grid of damage categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentationMask {
    height: u32,
    width: u32,
    labels: Vec<DamageCategory>,
}

impl SegmentationMask {
    /// Builds a mask from raw category codes in row-major order.
    pub fn from_codes(height: u32, width: u32, codes: &[u8]) -> Result<Self, MaskError> {
        Self::check_dims(height, width, codes.len())?;
        let mut labels = Vec::with_capacity(codes.len());
        for (i, &code) in codes.iter().enumerate() {
            let category = DamageCategory::from_code(code).ok_or(MaskError::ValueOutOfRange {
                value: code,
                u: (i as u32) % width,
                v: (i as u32) / width,
            })?;
            labels.push(category);
        }
        Ok(Self { height, width, labels })
    }

    pub fn from_labels(
        height: u32,
        width: u32,
        labels: Vec<DamageCategory>,
    ) -> Result<Self, MaskError> {
        Self::check_dims(height, width, labels.len())?;
        Ok(Self { height, width, labels })
    }

    /// Builds a mask by evaluating `f(u, v)` for every pixel.
    pub fn from_fn(
        height: u32,
        width: u32,
        mut f: impl FnMut(u32, u32) -> DamageCategory,
    ) -> Result<Self, MaskError> {
        if height == 0 || width == 0 {
            return Err(MaskError::EmptyDimensions { height, width });
        }
        let mut labels = Vec::with_capacity(height as usize * width as usize);
        for v in 0..height {
            for u in 0..width {
                labels.push(f(u, v));
            }
        }
        Ok(Self { height, width, labels })
    }

    fn check_dims(height: u32, width: u32, len: usize) -> Result<(), MaskError> {
        if height == 0 || width == 0 {
            return Err(MaskError::EmptyDimensions { height, width });
        }
        let expected = height as usize * width as usize;
        if len != expected {
            return Err(MaskError::LengthMismatch { expected, got: len });
        }
        Ok(())
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn labels(&self) -> &[DamageCategory] {
        &self.labels
    }

    /// Category at column `u`, row `v`.
    pub fn get(&self, u: u32, v: u32) -> Option<DamageCategory> {
        if u >= self.width || v >= self.height {
            return None;
        }
        Some(self.labels[v as usize * self.width as usize + u as usize])
    }

    pub(crate) fn get_unchecked(&self, u: u32, v: u32) -> DamageCategory {
        self.labels[v as usize * self.width as usize + u as usize]
    }

    /// Row-major category codes, one byte per pixel.
    pub fn to_codes(&self) -> Vec<u8> {
        self.labels.iter().map(|c| c.code()).collect()
    }

    /// Pixel count per category; counts sum to `height * width`.
    pub fn category_histogram(&self) -> CategoryCounts {
        let mut counts = CategoryCounts::default();
        for &label in &self.labels {
            counts.add(label, 1);
        }
        counts
    }
}

/// Injective mapping between RGB colors and damage categories.
///
/// The default follows the usual change-mask encoding: black background,
/// green intact, blue damaged, red destroyed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Palette {
    colors: [[u8; 3]; 4],
}

impl Default for Palette {
    fn default() -> Self {
        Self {
            colors: [[0, 0, 0], [0, 255, 0], [0, 0, 255], [255, 0, 0]],
        }
    }
}

impl Palette {
    /// Color assigned to `category`.
    pub fn color(&self, category: DamageCategory) -> [u8; 3] {
        self.colors[category.code() as usize]
    }

    /// Category for an exact color match.
    pub fn category(&self, rgb: [u8; 3]) -> Option<DamageCategory> {
        DamageCategory::ALL
            .into_iter()
            .find(|&c| self.colors[c.code() as usize] == rgb)
    }

    /// Category whose color lies within `tolerance` on every channel.
    ///
    /// Ambiguities resolve to the closest color (max channel distance,
    /// then L1 distance, then lowest code).
    pub fn category_within(&self, rgb: [u8; 3], tolerance: u8) -> Option<DamageCategory> {
        if tolerance == 0 {
            return self.category(rgb);
        }
        let mut best: Option<(u16, u16, DamageCategory)> = None;
        for category in DamageCategory::ALL {
            let color = self.colors[category.code() as usize];
            let diffs = [
                rgb[0].abs_diff(color[0]),
                rgb[1].abs_diff(color[1]),
                rgb[2].abs_diff(color[2]),
            ];
            let max = diffs.iter().copied().max().unwrap_or(0);
            if max > tolerance {
                continue;
            }
            let l1 = diffs.iter().map(|&d| d as u16).sum::<u16>();
            let key = (max as u16, l1, category);
            if best.is_none_or(|b| (key.0, key.1) < (b.0, b.1)) {
                best = Some(key);
            }
        }
        best.map(|(_, _, c)| c)
    }

    /// Replaces the color of one category, keeping the mapping injective.
    pub fn with_color(
        mut self,
        category: DamageCategory,
        rgb: [u8; 3],
    ) -> Result<Self, MaskError> {
        self.colors[category.code() as usize] = rgb;
        for a in DamageCategory::ALL {
            for b in DamageCategory::ALL {
                if a < b && self.colors[a.code() as usize] == self.colors[b.code() as usize] {
                    let [r, g, bch] = self.colors[a.code() as usize];
                    return Err(MaskError::DuplicateColor { r, g, b: bch });
                }
            }
        }
        Ok(self)
    }

    /// Parses a palette override config: one `R,G,B=category_name` line per
    /// category. Unlisted categories keep their default color; blank lines
    /// and `#` comments are skipped.
    pub fn parse_config(text: &str) -> Result<Self, MaskError> {
        let mut palette = Palette::default();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let invalid = || MaskError::InvalidPaletteEntry { line: String::from(line) };
            let (rgb_part, name) = line.split_once('=').ok_or_else(invalid)?;
            let mut channels = rgb_part.split(',').map(|c| c.trim().parse::<u8>());
            let r = channels.next().ok_or_else(invalid)?.map_err(|_| invalid())?;
            let g = channels.next().ok_or_else(invalid)?.map_err(|_| invalid())?;
            let b = channels.next().ok_or_else(invalid)?.map_err(|_| invalid())?;
            if channels.next().is_some() {
                return Err(invalid());
            }
            let category = DamageCategory::from_name(name.trim()).ok_or_else(invalid)?;
            palette = palette.with_color(category, [r, g, b])?;
        }
        Ok(palette)
    }

    /// Decodes a row-major RGB buffer (3 bytes per pixel) into a mask.
    pub fn decode_rgb(
        &self,
        height: u32,
        width: u32,
        rgb: &[u8],
        tolerance: u8,
    ) -> Result<SegmentationMask, MaskError> {
        if height == 0 || width == 0 {
            return Err(MaskError::EmptyDimensions { height, width });
        }
        let pixels = height as usize * width as usize;
        if rgb.len() != pixels * 3 {
            return Err(MaskError::LengthMismatch { expected: pixels * 3, got: rgb.len() });
        }
        let mut labels = Vec::with_capacity(pixels);
        for i in 0..pixels {
            let color = [rgb[i * 3], rgb[i * 3 + 1], rgb[i * 3 + 2]];
            let category = self.category_within(color, tolerance).ok_or({
                MaskError::UnmappedColor {
                    r: color[0],
                    g: color[1],
                    b: color[2],
                    u: (i as u32) % width,
                    v: (i as u32) / width,
                }
            })?;
            labels.push(category);
        }
        SegmentationMask::from_labels(height, width, labels)
    }

    /// Encodes a mask back into a row-major RGB buffer.
    pub fn encode_rgb(&self, mask: &SegmentationMask) -> Vec<u8> {
        let mut out = Vec::with_capacity(mask.labels().len() * 3);
        for &label in mask.labels() {
            out.extend_from_slice(&self.color(label));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_codes_round_trip() {
        for category in DamageCategory::ALL {
            assert_eq!(DamageCategory::from_code(category.code()), Some(category));
            assert_eq!(DamageCategory::from_name(category.name()), Some(category));
        }
        assert_eq!(DamageCategory::from_code(4), None);
        assert!(!DamageCategory::Background.is_building());
        assert!(DamageCategory::Damaged.is_building());
    }

    #[test]
    fn histogram_counts_sum_to_area() {
        let mask = SegmentationMask::from_codes(4, 4, &[
            1, 1, 1, 1, //
            1, 1, 1, 1, //
            2, 2, 2, 2, //
            3, 3, 3, 3,
        ])
        .unwrap();
        let hist = mask.category_histogram();
        assert_eq!(hist.intact, 8);
        assert_eq!(hist.damaged, 4);
        assert_eq!(hist.destroyed, 4);
        assert_eq!(hist.background, 0);
        assert_eq!(hist.total(), 16);
    }

    #[test]
    fn histogram_all_background() {
        let mask = SegmentationMask::from_codes(3, 3, &[0; 9]).unwrap();
        let hist = mask.category_histogram();
        assert_eq!(hist.background, 9);
        assert_eq!(hist.building_total(), 0);
    }

    #[test]
    fn histogram_single_destroyed() {
        let mask = SegmentationMask::from_codes(1, 1, &[3]).unwrap();
        let hist = mask.category_histogram();
        assert_eq!(hist.destroyed, 1);
        assert_eq!(hist.total(), 1);
    }

    #[test]
    fn from_codes_rejects_out_of_range() {
        let err = SegmentationMask::from_codes(1, 1, &[7]).unwrap_err();
        assert_eq!(err, MaskError::ValueOutOfRange { value: 7, u: 0, v: 0 });
        assert_eq!(
            alloc::format!("{err}"),
            "value 7 outside category range at (0,0)"
        );
    }

    #[test]
    fn from_codes_rejects_bad_lengths() {
        assert!(matches!(
            SegmentationMask::from_codes(2, 2, &[0; 3]),
            Err(MaskError::LengthMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            SegmentationMask::from_codes(0, 5, &[]),
            Err(MaskError::EmptyDimensions { .. })
        ));
    }

    #[test]
    fn default_palette_decodes_primaries() {
        let palette = Palette::default();
        // 2x2 all-black image decodes to background.
        let mask = palette.decode_rgb(2, 2, &[0; 12], 0).unwrap();
        assert!(mask.labels().iter().all(|&c| c == DamageCategory::Background));

        // A single green pixel decodes to an intact cell.
        let mask = palette.decode_rgb(1, 1, &[0, 255, 0], 0).unwrap();
        assert_eq!(mask.get(0, 0), Some(DamageCategory::Intact));
    }

    #[test]
    fn unmapped_color_names_value_and_coordinate() {
        let palette = Palette::default();
        let err = palette
            .decode_rgb(1, 2, &[0, 0, 0, 10, 20, 30], 0)
            .unwrap_err();
        assert_eq!(
            err,
            MaskError::UnmappedColor { r: 10, g: 20, b: 30, u: 1, v: 0 }
        );
    }

    #[test]
    fn palette_tolerance_absorbs_noise() {
        let palette = Palette::default();
        assert_eq!(palette.category_within([2, 250, 1], 0), None);
        assert_eq!(
            palette.category_within([2, 250, 1], 8),
            Some(DamageCategory::Intact)
        );
    }

    #[test]
    fn palette_decode_encode_round_trips() {
        let palette = Palette::default();
        let rgb = [0u8, 0, 0, 0, 255, 0, 0, 0, 255, 255, 0, 0];
        let mask = palette.decode_rgb(2, 2, &rgb, 0).unwrap();
        assert_eq!(palette.encode_rgb(&mask), rgb.to_vec());
    }

    #[test]
    fn palette_config_overrides_colors() {
        let palette = Palette::parse_config(
            "# custom colors\n128,128,0=intact\n10,10,10 = damaged\n",
        )
        .unwrap();
        assert_eq!(palette.category([128, 128, 0]), Some(DamageCategory::Intact));
        assert_eq!(palette.category([10, 10, 10]), Some(DamageCategory::Damaged));
        assert_eq!(palette.category([255, 0, 0]), Some(DamageCategory::Destroyed));
        assert!(Palette::parse_config("0,0,0=intact").is_err()); // collides with background
        assert!(Palette::parse_config("1,2=damaged").is_err());
    }
}
