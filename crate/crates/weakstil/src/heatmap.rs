//! Tile-score heatmaps rendered to binary PPM (P6).
//!
//! Each tile paints a scale x scale block with a blue-to-red ramp;
//! grid cells without a tile stay white.

use crate::bag::FeatureBag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapCanvas {
    /// Width in pixels (tile columns times scale).
    pub width: usize,
    pub height: usize,
    pub scale: usize,
    /// RGB bytes, row-major.
    pub pixels: Vec<u8>,
}

/// Linear blue-to-red ramp: R = round(255 s), G = 0, B = round(255 (1-s)).
pub fn ramp_color(score: f64) -> (u8, u8, u8) {
    let r = (255.0 * score + 0.5).floor() as u8;
    let b = (255.0 * (1.0 - score) + 0.5).floor() as u8;
    (r, 0, b)
}

/// Paint one block per tile over a white background.
pub fn render(bag: &FeatureBag, tile_scores: &[f64], scale: usize) -> Result<HeatmapCanvas> {
    if tile_scores.len() != bag.tiles.len() {
        return Err(Error::validation(format!(
            "expected {} tile scores, got {}",
            bag.tiles.len(),
            tile_scores.len()
        )));
    }
    if scale == 0 {
        return Err(Error::validation("scale must be >= 1"));
    }
    if let Some(s) = tile_scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::validation(format!("tile score {s} out of [0, 1]")));
    }
    let cols = bag.tiles.iter().map(|t| t.col).max().unwrap_or(0) as usize + 1;
    let rows = bag.tiles.iter().map(|t| t.row).max().unwrap_or(0) as usize + 1;
    let width = cols * scale;
    let height = rows * scale;
    let mut pixels = vec![255u8; width * height * 3];
    for (tile, &score) in bag.tiles.iter().zip(tile_scores) {
        let (r, g, b) = ramp_color(score);
        for dy in 0..scale {
            let y = tile.row as usize * scale + dy;
            for dx in 0..scale {
                let x = tile.col as usize * scale + dx;
                let at = (y * width + x) * 3;
                pixels[at] = r;
                pixels[at + 1] = g;
                pixels[at + 2] = b;
            }
        }
    }
    Ok(HeatmapCanvas { width, height, scale, pixels })
}

/// Binary PPM: `P6\n<w> <h>\n255\n` followed by the raw RGB bytes.
pub fn encode_ppm(canvas: &HeatmapCanvas) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", canvas.width, canvas.height).into_bytes();
    out.extend_from_slice(&canvas.pixels);
    out
}

pub fn write_ppm(canvas: &HeatmapCanvas, path: &std::path::Path) -> Result<()> {
    crate::io::atomic_write(path, &encode_ppm(canvas))
}

/// Parse a P6 file produced by `encode_ppm`; used to verify round-trips.
pub fn parse_ppm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let header_end = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .map(|(i, _)| i)
        .nth(2)
        .ok_or_else(|| Error::format("incomplete ppm header", 0))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| Error::format("non-ascii ppm header", 0))?;
    let mut parts = header.split_ascii_whitespace();
    if parts.next() != Some("P6") {
        return Err(Error::format("not a P6 file", 0));
    }
    let width: usize = parts
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| Error::format("bad width", 3))?;
    let height: usize = parts
        .next()
        .and_then(|h| h.parse().ok())
        .ok_or_else(|| Error::format("bad height", 3))?;
    if parts.next() != Some("255") {
        return Err(Error::format("unsupported max value", header_end as u64));
    }
    let pixels = &bytes[header_end + 1..];
    if pixels.len() != width * height * 3 {
        return Err(Error::format(
            format!("pixel payload {} bytes, expected {}", pixels.len(), width * height * 3),
            header_end as u64 + 1,
        ));
    }
    Ok((width, height, pixels.to_vec()))
}
