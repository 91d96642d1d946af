//! Domain types for slide-level feature bags.
//!
//! A bag holds the pre-extracted tile feature vectors of one whole-slide
//! image together with its weak slide-level label. Bags are immutable
//! after construction and safe to share across concurrent readers.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// One tile: its grid position and its latent feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct TileFeature {
    pub col: u32,
    pub row: u32,
    pub features: Vec<f64>,
}

/// One slide's worth of tiles plus its weak label.
///
/// `label` is the pathologist sTIL score stored as a fraction in [0, 1],
/// never as a percentage. `stratum` is an opaque grouping key used only
/// for stratified splitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBag {
    pub patient_id: String,
    pub slide_id: String,
    pub h_dim: usize,
    pub tiles: Vec<TileFeature>,
    pub label: f64,
    pub stratum: String,
}

impl FeatureBag {
    pub fn num_tiles(&self) -> usize {
        self.tiles.len()
    }
}

/// Physical tile geometry used by the detection baseline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileGeometry {
    /// Pixels per tile side.
    pub tile_px: u32,
    /// Microns per pixel.
    pub mpp: f64,
    /// Assumed average lymphocyte radius in microns.
    pub til_radius_um: f64,
}

impl Default for TileGeometry {
    fn default() -> Self {
        Self { tile_px: 512, mpp: 0.5, til_radius_um: 4.0 }
    }
}

impl TileGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.tile_px == 0 || self.mpp <= 0.0 || self.til_radius_um <= 0.0 {
            return Err(Error::validation("tile geometry fields must be strictly positive"));
        }
        Ok(())
    }

    /// Tile area in square microns: (tile_px * mpp)^2.
    pub fn tile_area_um2(&self) -> f64 {
        let side = self.tile_px as f64 * self.mpp;
        side * side
    }

    /// Area of one lymphocyte in square microns: pi * r^2.
    pub fn til_area_um2(&self) -> f64 {
        std::f64::consts::PI * self.til_radius_um * self.til_radius_um
    }
}

/// Check every bag invariant, reporting the first violation found.
pub fn validate_bag(bag: &FeatureBag) -> Result<()> {
    if bag.h_dim == 0 {
        return Err(Error::validation(format!("slide {}: h_dim must be >= 1", bag.slide_id)));
    }
    if bag.tiles.is_empty() {
        return Err(Error::validation(format!("slide {}: bag has no tiles", bag.slide_id)));
    }
    if !bag.label.is_finite() || !(0.0..=1.0).contains(&bag.label) {
        return Err(Error::validation(format!(
            "slide {}: label out of range (got {})",
            bag.slide_id, bag.label
        )));
    }
    let mut coords = HashSet::with_capacity(bag.tiles.len());
    for (i, tile) in bag.tiles.iter().enumerate() {
        if tile.features.len() != bag.h_dim {
            return Err(Error::validation(format!(
                "slide {}: dimension mismatch at tile {} (got {}, expected {})",
                bag.slide_id,
                i,
                tile.features.len(),
                bag.h_dim
            )));
        }
        if let Some(j) = tile.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!(
                "slide {}: non-finite feature at tile {} component {}",
                bag.slide_id, i, j
            )));
        }
        if !coords.insert((tile.col, tile.row)) {
            return Err(Error::validation(format!(
                "slide {}: duplicate coordinate ({}, {}) at tile {}",
                bag.slide_id, tile.col, tile.row, i
            )));
        }
    }
    Ok(())
}
