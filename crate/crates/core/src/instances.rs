//! Building-instance extraction and oriented-box fitting.
//!
//! Connected components are extracted per category (a damaged pixel never
//! merges with an adjacent destroyed one) in raster-scan order. Each instance
//! gets a rotation-aware box: the principal orientation comes from the SVD of
//! the centered pixel coordinates, extents from projections onto the
//! principal axes plus one pixel of footprint padding.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::mask::{DamageCategory, SegmentationMask};
use crate::zones::Zone;

/// Pixel connectivity for component labeling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

/// Axis-aligned bounds, inclusive on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Aabb {
    pub u_min: u32,
    pub v_min: u32,
    pub u_max: u32,
    pub v_max: u32,
}

/// Rotated rectangle in pixel coordinates. `theta` is the principal-axis
/// direction in `[-pi/2, pi/2)`; `w` is the extent along it and `h` the
/// extent across it, so `w >= h` whenever extents follow the variance order
/// (true for all but cross-shaped outliers).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub theta: f64,
}

impl OrientedBox {
    /// `category_code cx/W cy/H w/W h/H theta`, six decimal places each.
    pub fn to_yolo_record(&self, category: DamageCategory, height: u32, width: u32) -> String {
        format!(
            "{} {:.6} {:.6} {:.6} {:.6} {:.6}",
            category.code(),
            self.cx / width as f64,
            self.cy / height as f64,
            self.w / width as f64,
            self.h / height as f64,
            self.theta,
        )
    }
}

/// One connected component of same-category building pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingInstance {
    /// Index in raster-scan discovery order.
    pub id: u32,
    pub category: DamageCategory,
    /// Member pixels as `(u, v)` pairs.
    pub pixels: Vec<(u32, u32)>,
    pub aabb: Aabb,
    /// Majority-overlap zone, filled by [`crate::zones::ZoneGeometry::assign_zone`].
    pub zone: Option<Zone>,
    /// Oriented box, filled by [`fit_obb`].
    pub obb: Option<OrientedBox>,
}

impl BuildingInstance {
    pub fn pixel_count(&self) -> u64 {
        self.pixels.len() as u64
    }

    /// YOLO-OBB line for this instance; `None` until the box is fitted.
    pub fn yolo_record(&self, height: u32, width: u32) -> Option<String> {
        self.obb.map(|obb| obb.to_yolo_record(self.category, height, width))
    }
}

/// Extracts all same-category connected components of building pixels.
///
/// Instances come back in first-encounter raster-scan order with `zone` and
/// `obb` unset. An all-background mask yields an empty list.
pub fn extract_instances(mask: &SegmentationMask, connectivity: Connectivity) -> Vec<BuildingInstance> {
    let height = mask.height();
    let width = mask.width();
    let mut visited = alloc::vec![false; height as usize * width as usize];
    let mut instances = Vec::new();
    let offsets = connectivity.offsets();
    // Scratch queue for the flood fill; indices into the pixel grid.
    let mut frontier: Vec<(u32, u32)> = Vec::new();

    for v in 0..height {
        for u in 0..width {
            let idx = v as usize * width as usize + u as usize;
            if visited[idx] {
                continue;
            }
            let category = mask.get_unchecked(u, v);
            if !category.is_building() {
                continue;
            }
            visited[idx] = true;
            frontier.clear();
            frontier.push((u, v));
            let mut pixels = Vec::new();
            let (mut u_min, mut u_max, mut v_min, mut v_max) = (u, u, v, v);
            while let Some((cu, cv)) = frontier.pop() {
                pixels.push((cu, cv));
                u_min = u_min.min(cu);
                u_max = u_max.max(cu);
                v_min = v_min.min(cv);
                v_max = v_max.max(cv);
                for &(du, dv) in offsets {
                    let nu = cu as i64 + du as i64;
                    let nv = cv as i64 + dv as i64;
                    if nu < 0 || nv < 0 || nu >= width as i64 || nv >= height as i64 {
                        continue;
                    }
                    let (nu, nv) = (nu as u32, nv as u32);
                    let nidx = nv as usize * width as usize + nu as usize;
                    if !visited[nidx] && mask.get_unchecked(nu, nv) == category {
                        visited[nidx] = true;
                        frontier.push((nu, nv));
                    }
                }
            }
            instances.push(BuildingInstance {
                id: instances.len() as u32,
                category,
                pixels,
                aabb: Aabb { u_min, v_min, u_max, v_max },
                zone: None,
                obb: None,
            });
        }
    }
    instances
}

/// Relative singular-value gap below which the orientation is treated as
/// isotropic and forced to zero.
const DEGENERATE_GAP: f64 = 1e-9;

/// Fits an oriented box to a set of pixel centers. Returns `None` on an
/// empty set.
///
/// The principal direction is the first right singular vector of the centered
/// coordinate matrix; `theta = arctan(v_y / v_x)` normalized to
/// `[-pi/2, pi/2)`. Extents along both principal axes gain one pixel for the
/// unit footprint of a pixel center. `theta` always tracks the principal
/// axis, even for shapes whose across-axis extent happens to be larger.
/// Single pixels and isotropic blobs take `theta = 0`.
pub fn fit_obb(pixels: &[(u32, u32)]) -> Option<OrientedBox> {
    if pixels.is_empty() {
        return None;
    }
    let mut theta = principal_angle(pixels);
    // Canonicalize -0.0 so records never print a negative zero.
    if theta == 0.0 {
        theta = 0.0;
    }
    let (sin_t, cos_t) = libm::sincos(theta);

    let mut min_a = f64::INFINITY;
    let mut max_a = f64::NEG_INFINITY;
    let mut min_b = f64::INFINITY;
    let mut max_b = f64::NEG_INFINITY;
    for &(u, v) in pixels {
        let (x, y) = (u as f64, v as f64);
        let a = x * cos_t + y * sin_t;
        let b = -x * sin_t + y * cos_t;
        min_a = min_a.min(a);
        max_a = max_a.max(a);
        min_b = min_b.min(b);
        max_b = max_b.max(b);
    }

    let w = max_a - min_a + 1.0;
    let h = max_b - min_b + 1.0;
    let mid_a = (min_a + max_a) / 2.0;
    let mid_b = (min_b + max_b) / 2.0;
    let cx = mid_a * cos_t - mid_b * sin_t;
    let cy = mid_a * sin_t + mid_b * cos_t;

    Some(OrientedBox { cx, cy, w, h, theta })
}

/// Principal orientation of the pixel set from the SVD of the centered
/// coordinates, or zero when degenerate.
fn principal_angle(pixels: &[(u32, u32)]) -> f64 {
    if pixels.len() < 2 {
        return 0.0;
    }
    // Scatter matrix of centered coordinates via exact integer sums:
    // G = sum (x - mean)(x - mean)^T, entries (n*S2 - S1^2) / n.
    let n = pixels.len() as i128;
    let (mut su, mut sv, mut suu, mut svv, mut suv) = (0i128, 0i128, 0i128, 0i128, 0i128);
    for &(u, v) in pixels {
        let (u, v) = (u as i128, v as i128);
        su += u;
        sv += v;
        suu += u * u;
        svv += v * v;
        suv += u * v;
    }
    let nf = n as f64;
    let gxx = (n * suu - su * su) as f64 / nf;
    let gyy = (n * svv - sv * sv) as f64 / nf;
    let gxy = (n * suv - su * sv) as f64 / nf;

    // Closed-form eigenvalues of the 2x2 scatter; singular values are their
    // square roots.
    let mean = (gxx + gyy) / 2.0;
    let half_diff = (gxx - gyy) / 2.0;
    let radius = libm::sqrt(half_diff * half_diff + gxy * gxy);
    let lambda1 = mean + radius;
    let lambda2 = (mean - radius).max(0.0);
    let sigma1 = libm::sqrt(lambda1.max(0.0));
    let sigma2 = libm::sqrt(lambda2);
    if sigma1 <= 0.0 || (sigma1 - sigma2) <= DEGENERATE_GAP * sigma1 {
        return 0.0;
    }

    // Leading eigenvector; pick the better-conditioned expression.
    let (vx, vy) = if gxy == 0.0 {
        if gxx >= gyy {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let cand_a = (lambda1 - gyy, gxy);
        let cand_b = (gxy, lambda1 - gxx);
        let norm_a = cand_a.0 * cand_a.0 + cand_a.1 * cand_a.1;
        let norm_b = cand_b.0 * cand_b.0 + cand_b.1 * cand_b.1;
        if norm_a >= norm_b {
            cand_a
        } else {
            cand_b
        }
    };
    normalize_angle(libm::atan2(vy, vx))
}

/// Maps an angle into `[-pi/2, pi/2)` modulo pi.
fn normalize_angle(mut theta: f64) -> f64 {
    use core::f64::consts::{FRAC_PI_2, PI};
    while theta < -FRAC_PI_2 {
        theta += PI;
    }
    while theta >= FRAC_PI_2 {
        theta -= PI;
    }
    theta
}
