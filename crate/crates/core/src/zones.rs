//! Five-zone spatial partition of the image domain.
//!
//! The central zone is the rectangle `0.25H <= v < 0.75H`, `0.2W <= u < 0.8W`.
//! Left and right strips run the full image height; top and bottom bands span
//! the central column range, so the five zones are disjoint and exhaustive.

use serde::{Deserialize, Serialize};

/// One of the five semantic zones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Top,
    Central,
    Bottom,
    Left,
    Right,
}

impl Zone {
    /// All zones in display order.
    pub const ALL: [Zone; 5] = [Zone::Top, Zone::Central, Zone::Bottom, Zone::Left, Zone::Right];

    /// Tie-break priority for majority-overlap assignment (highest first).
    pub const PRIORITY: [Zone; 5] =
        [Zone::Central, Zone::Top, Zone::Bottom, Zone::Left, Zone::Right];

    pub fn name(self) -> &'static str {
        match self {
            Zone::Top => "top",
            Zone::Central => "central",
            Zone::Bottom => "bottom",
            Zone::Left => "left",
            Zone::Right => "right",
        }
    }

    fn index(self) -> usize {
        match self {
            Zone::Top => 0,
            Zone::Central => 1,
            Zone::Bottom => 2,
            Zone::Left => 3,
            Zone::Right => 4,
        }
    }
}

/// Errors from zone lookups and assignment.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZoneError {
    #[error("zone geometry requires dimensions of at least 1x1 (got {height}x{width})")]
    EmptyDimensions { height: u32, width: u32 },
    #[error("pixel ({v},{u}) outside {height}x{width} image")]
    OutOfRange { u: u32, v: u32, height: u32, width: u32 },
    #[error("cannot assign a zone to an empty pixel set")]
    EmptyPixelSet,
}

/// Zone boundaries for one image size.
///
/// Row cuts sit at `floor(0.25 H)` and `floor(0.75 H)`, column cuts at
/// `floor(0.2 W)` and `floor(0.8 W)`; on tiny images some zones are empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ZoneGeometry {
    pub height: u32,
    pub width: u32,
    pub r1: u32,
    pub r2: u32,
    pub c1: u32,
    pub c2: u32,
}

impl ZoneGeometry {
    pub fn new(height: u32, width: u32) -> Result<Self, ZoneError> {
        if height == 0 || width == 0 {
            return Err(ZoneError::EmptyDimensions { height, width });
        }
        Ok(Self {
            height,
            width,
            r1: height / 4,
            r2: (height as u64 * 3 / 4) as u32,
            c1: width / 5,
            c2: (width as u64 * 4 / 5) as u32,
        })
    }

    /// Zone containing the pixel at column `u`, row `v`.
    #[inline]
    pub fn zone_of_pixel(&self, u: u32, v: u32) -> Result<Zone, ZoneError> {
        if u >= self.width || v >= self.height {
            return Err(ZoneError::OutOfRange {
                u,
                v,
                height: self.height,
                width: self.width,
            });
        }
        Ok(self.zone_of_pixel_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn zone_of_pixel_unchecked(&self, u: u32, v: u32) -> Zone {
        if u < self.c1 {
            Zone::Left
        } else if u >= self.c2 {
            Zone::Right
        } else if v < self.r1 {
            Zone::Top
        } else if v >= self.r2 {
            Zone::Bottom
        } else {
            Zone::Central
        }
    }

    /// Pixel area of `zone`, computed from the boundary cuts alone.
    pub fn area(&self, zone: Zone) -> u64 {
        let h = self.height as u64;
        let band = (self.c2 - self.c1) as u64;
        match zone {
            Zone::Left => h * self.c1 as u64,
            Zone::Right => h * (self.width - self.c2) as u64,
            Zone::Top => self.r1 as u64 * band,
            Zone::Bottom => (self.height - self.r2) as u64 * band,
            Zone::Central => (self.r2 - self.r1) as u64 * band,
        }
    }

    /// Majority-overlap zone of an instance: the zone holding the most
    /// constituent pixels, ties broken central > top > bottom > left > right.
    pub fn assign_zone(&self, pixels: &[(u32, u32)]) -> Result<Zone, ZoneError> {
        if pixels.is_empty() {
            return Err(ZoneError::EmptyPixelSet);
        }
        let mut counts = [0u64; 5];
        for &(u, v) in pixels {
            counts[self.zone_of_pixel(u, v)?.index()] += 1;
        }
        let mut best = Zone::PRIORITY[0];
        for zone in Zone::PRIORITY {
            if counts[zone.index()] > counts[best.index()] {
                best = zone;
            }
        }
        Ok(best)
    }
}
