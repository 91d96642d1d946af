//! Detection-count baseline: the tumor-bed TIL fraction computed from a
//! TIL count, the assumed per-lymphocyte area, and the tumor bed area.

use crate::bag::TileGeometry;
use crate::error::{Error, Result};

/// Output of an external TIL detector for one slide.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionSummary {
    pub slide_id: String,
    pub num_tils: u64,
    pub num_tb_tiles: u64,
    pub geometry: TileGeometry,
}

impl DetectionSummary {
    pub fn validate(&self) -> Result<()> {
        if self.num_tb_tiles == 0 {
            return Err(Error::validation(format!(
                "slide {}: tumor bed tile count must be >= 1",
                self.slide_id
            )));
        }
        self.geometry.validate()
    }
}

/// Fraction of tumor bed area occupied by TILs:
/// num_tils * A_TIL / (num_tb_tiles * A_tile).
///
/// Not clamped: counts can overshoot and the bias is worth seeing in
/// evaluation.
pub fn tb_til_percent(summary: &DetectionSummary) -> f64 {
    let bed_area = summary.num_tb_tiles as f64 * summary.geometry.tile_area_um2();
    summary.num_tils as f64 * summary.geometry.til_area_um2() / bed_area
}
