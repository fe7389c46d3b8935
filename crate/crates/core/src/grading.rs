//! Dual-threshold damage grading.
//!
//! The severity level comes from the destruction ratio
//! `rho_dest = destroyed / total` and the damage ratio
//! `rho_dam = (damaged + destroyed) / total` over building pixels, checked
//! top-down against fixed cutoffs with first-match semantics. Threshold
//! comparisons use integer cross-multiplication, so a ratio exactly at a
//! cutoff always takes the higher branch.

use serde::{Deserialize, Serialize};

use crate::mask::CategoryCounts;

/// Level names in level order.
pub const LEVEL_NAMES: [&str; 5] = ["No Damage", "Minor", "Moderate", "Severe", "Destroyed"];

/// How the minor branch treats destroyed-only scenes.
///
/// `Literal` grades level 1 only when damaged pixels exist, so a scene with a
/// small destroyed fraction and no damaged pixels falls to level 0.
/// `StrictMinor` counts destroyed pixels toward the minor branch as well.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingMode {
    #[default]
    Literal,
    StrictMinor,
}

/// Graded damage assessment for one pixel-count table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DamageAssessment {
    pub level: u8,
    pub name: &'static str,
    pub rho_dest: f64,
    pub rho_dam: f64,
    pub n_total: u64,
    pub n_damaged: u64,
    pub n_destroyed: u64,
}

/// `num / den >= t_num / t_den` without floating-point rounding.
fn ratio_at_least(num: u64, den: u64, t_num: u64, t_den: u64) -> bool {
    num as u128 * t_den as u128 >= t_num as u128 * den as u128
}

/// Grades a pixel-count table. Background pixels are ignored; an empty table
/// (no building pixels) grades level 0 with both ratios zero.
pub fn assess(counts: &CategoryCounts, mode: GradingMode) -> DamageAssessment {
    let n_total = counts.building_total();
    let n_damaged = counts.damaged;
    let n_destroyed = counts.destroyed;
    let n_affected = n_damaged + n_destroyed;

    let level = if n_total == 0 {
        0
    } else if ratio_at_least(n_destroyed, n_total, 3, 5)
        || ratio_at_least(n_affected, n_total, 17, 20)
    {
        4
    } else if ratio_at_least(n_destroyed, n_total, 3, 10)
        || ratio_at_least(n_affected, n_total, 3, 5)
    {
        3
    } else if ratio_at_least(n_destroyed, n_total, 1, 10)
        || ratio_at_least(n_affected, n_total, 7, 20)
    {
        2
    } else {
        let minor = match mode {
            GradingMode::Literal => n_damaged > 0,
            GradingMode::StrictMinor => n_affected > 0,
        };
        u8::from(minor)
    };

    let (rho_dest, rho_dam) = if n_total == 0 {
        (0.0, 0.0)
    } else {
        (
            n_destroyed as f64 / n_total as f64,
            n_affected as f64 / n_total as f64,
        )
    };

    DamageAssessment {
        level,
        name: LEVEL_NAMES[level as usize],
        rho_dest,
        rho_dam,
        n_total,
        n_damaged,
        n_destroyed,
    }
}
