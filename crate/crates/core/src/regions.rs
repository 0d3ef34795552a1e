//! The 3x3 named region grid and its minimum-depth reduction.
//!
//! The depth map is distilled into nine rectangles: a center band sized as
//! the projection of the vehicle's safe window onto a plane in front of the
//! camera, plus the eight surrounding rectangles formed by extending the
//! band boundaries to the image borders. Each region reports the minimum
//! valid depth inside it; a region with no valid pixels reports
//! [`FAR_SENTINEL_M`], which saturates to "fully far" after controller
//! normalization so empty regions never trigger avoidance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disparity::DepthMap;

/// Depth reported for a region with no valid pixels (3x the 3.0 m
/// normalization span).
pub const FAR_SENTINEL_M: f32 = 9.0;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("center side {side} px does not fit a {width}x{height} image")]
    OversizedCenter { side: u32, width: u32, height: u32 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// The nine named regions, row by row from the top of the image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Center,
    Up,
    Down,
    Left,
    Right,
    UpLeft,
    UpRight,
    DownLeft,
    DownRight,
}

impl Region {
    pub const ALL: [Region; 9] = [
        Region::Center,
        Region::Up,
        Region::Down,
        Region::Left,
        Region::Right,
        Region::UpLeft,
        Region::UpRight,
        Region::DownLeft,
        Region::DownRight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Region::Center => "center",
            Region::Up => "up",
            Region::Down => "down",
            Region::Left => "left",
            Region::Right => "right",
            Region::UpLeft => "up_left",
            Region::UpRight => "up_right",
            Region::DownLeft => "down_left",
            Region::DownRight => "down_right",
        }
    }
}

/// Column and row bounds of the center band; the nine induced half-open
/// rectangles partition the image exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RegionGrid {
    pub width_px: u32,
    pub height_px: u32,
    pub x_lo: u32,
    pub x_hi: u32,
    pub y_lo: u32,
    pub y_hi: u32,
}

impl RegionGrid {
    pub fn new(
        width_px: u32,
        height_px: u32,
        x_lo: u32,
        x_hi: u32,
        y_lo: u32,
        y_hi: u32,
    ) -> Result<Self, RegionError> {
        if !(0 < x_lo && x_lo < x_hi && x_hi < width_px) {
            return Err(RegionError::InvalidArg(format!(
                "need 0 < x_lo < x_hi < width: {x_lo}, {x_hi}, {width_px}"
            )));
        }
        if !(0 < y_lo && y_lo < y_hi && y_hi < height_px) {
            return Err(RegionError::InvalidArg(format!(
                "need 0 < y_lo < y_hi < height: {y_lo}, {y_hi}, {height_px}"
            )));
        }
        Ok(Self { width_px, height_px, x_lo, x_hi, y_lo, y_hi })
    }

    /// Region owning pixel (x, y). Bands are half-open, so every pixel
    /// belongs to exactly one region.
    #[inline]
    pub fn region_of(&self, x: u32, y: u32) -> Region {
        debug_assert!(x < self.width_px && y < self.height_px);
        let col = if x < self.x_lo {
            0
        } else if x < self.x_hi {
            1
        } else {
            2
        };
        let row = if y < self.y_lo {
            0
        } else if y < self.y_hi {
            1
        } else {
            2
        };
        const TABLE: [[Region; 3]; 3] = [
            [Region::UpLeft, Region::Up, Region::UpRight],
            [Region::Left, Region::Center, Region::Right],
            [Region::DownLeft, Region::Down, Region::DownRight],
        ];
        TABLE[row][col]
    }

    /// Half-open pixel rectangle (x0, y0, x1, y1) of a region.
    pub fn rect(&self, region: Region) -> (u32, u32, u32, u32) {
        let (x0, x1) = match region {
            Region::UpLeft | Region::Left | Region::DownLeft => (0, self.x_lo),
            Region::Up | Region::Center | Region::Down => (self.x_lo, self.x_hi),
            Region::UpRight | Region::Right | Region::DownRight => (self.x_hi, self.width_px),
        };
        let (y0, y1) = match region {
            Region::UpLeft | Region::Up | Region::UpRight => (0, self.y_lo),
            Region::Left | Region::Center | Region::Right => (self.y_lo, self.y_hi),
            Region::DownLeft | Region::Down | Region::DownRight => (self.y_hi, self.height_px),
        };
        (x0, y0, x1, y1)
    }
}

/// Side length in pixels of the projection of a `safe_width_m` square onto a
/// plane `plane_dist_m` in front of the image plane.
pub fn center_region_px(
    focal_px: f64,
    safe_width_m: f64,
    plane_dist_m: f64,
) -> Result<u32, RegionError> {
    if !(focal_px > 0.0 && safe_width_m > 0.0 && plane_dist_m > 0.0) {
        return Err(RegionError::InvalidArg(format!(
            "all arguments must be positive: {focal_px}, {safe_width_m}, {plane_dist_m}"
        )));
    }
    Ok((focal_px * safe_width_m / plane_dist_m).round() as u32)
}

/// Grid with a centered square band of side `center_side_px`; the eight
/// outer regions extend the band boundaries to the image borders.
pub fn make_grid(width_px: u32, height_px: u32, center_side_px: u32) -> Result<RegionGrid, RegionError> {
    if center_side_px == 0 || center_side_px + 2 >= width_px.min(height_px) {
        return Err(RegionError::OversizedCenter {
            side: center_side_px,
            width: width_px,
            height: height_px,
        });
    }
    let x_lo = (width_px - center_side_px) / 2;
    let y_lo = (height_px - center_side_px) / 2;
    RegionGrid::new(
        width_px,
        height_px,
        x_lo,
        x_lo + center_side_px,
        y_lo,
        y_lo + center_side_px,
    )
}

/// The nine per-region minimum depths, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionDepths {
    pub center: f32,
    pub up: f32,
    pub down: f32,
    pub left: f32,
    pub right: f32,
    pub up_left: f32,
    pub up_right: f32,
    pub down_left: f32,
    pub down_right: f32,
}

impl RegionDepths {
    pub fn uniform(depth_m: f32) -> Self {
        Self {
            center: depth_m,
            up: depth_m,
            down: depth_m,
            left: depth_m,
            right: depth_m,
            up_left: depth_m,
            up_right: depth_m,
            down_left: depth_m,
            down_right: depth_m,
        }
    }

    pub fn get(&self, region: Region) -> f32 {
        match region {
            Region::Center => self.center,
            Region::Up => self.up,
            Region::Down => self.down,
            Region::Left => self.left,
            Region::Right => self.right,
            Region::UpLeft => self.up_left,
            Region::UpRight => self.up_right,
            Region::DownLeft => self.down_left,
            Region::DownRight => self.down_right,
        }
    }

    pub fn set(&mut self, region: Region, depth_m: f32) {
        match region {
            Region::Center => self.center = depth_m,
            Region::Up => self.up = depth_m,
            Region::Down => self.down = depth_m,
            Region::Left => self.left = depth_m,
            Region::Right => self.right = depth_m,
            Region::UpLeft => self.up_left = depth_m,
            Region::UpRight => self.up_right = depth_m,
            Region::DownLeft => self.down_left = depth_m,
            Region::DownRight => self.down_right = depth_m,
        }
    }
}

/// Per-region minimum over valid pixels; [`FAR_SENTINEL_M`] where a region
/// has none.
pub fn region_min_depths(depth: &DepthMap, grid: &RegionGrid) -> Result<RegionDepths, RegionError> {
    if depth.width() != grid.width_px || depth.height() != grid.height_px {
        return Err(RegionError::DimensionMismatch(format!(
            "depth map {}x{} vs grid {}x{}",
            depth.width(),
            depth.height(),
            grid.width_px,
            grid.height_px
        )));
    }
    let mut minima = [f32::INFINITY; 9];
    accumulate_row_minima(depth.values(), depth.width() as usize, 0, grid, &mut minima);
    Ok(finish_minima(minima))
}

/// Folds rows `[y0, y0 + rows)` of a value slice into per-region running
/// minima. Invalid pixels are the infinity sentinel, so plain `min` skips
/// them for free.
pub(crate) fn accumulate_row_minima(
    values: &[f32],
    width: usize,
    y0: usize,
    grid: &RegionGrid,
    minima: &mut [f32; 9],
) {
    let (x_lo, x_hi) = (grid.x_lo as usize, grid.x_hi as usize);
    for (dy, row) in values.chunks_exact(width).enumerate() {
        let y = (y0 + dy) as u32;
        let row_band = if y < grid.y_lo {
            0
        } else if y < grid.y_hi {
            1
        } else {
            2
        };
        // Column bands within the row: [0, x_lo), [x_lo, x_hi), [x_hi, w).
        let splits = [(0, x_lo), (x_lo, x_hi), (x_hi, width)];
        for (col_band, &(a, b)) in splits.iter().enumerate() {
            let region = region_index(row_band, col_band);
            let mut m = minima[region];
            for &v in &row[a..b] {
                m = m.min(v);
            }
            minima[region] = m;
        }
    }
}

pub(crate) fn finish_minima(minima: [f32; 9]) -> RegionDepths {
    let mut out = RegionDepths::uniform(FAR_SENTINEL_M);
    for (i, m) in minima.into_iter().enumerate() {
        if m.is_finite() {
            out.set(region_from_index(i), m);
        }
    }
    out
}

pub(crate) fn merge_minima(acc: &mut [f32; 9], other: &[f32; 9]) {
    for (a, &b) in acc.iter_mut().zip(other) {
        *a = a.min(b);
    }
}

#[inline]
fn region_index(row_band: usize, col_band: usize) -> usize {
    const TABLE: [[usize; 3]; 3] = [[5, 1, 6], [3, 0, 4], [7, 2, 8]];
    TABLE[row_band][col_band]
}

fn region_from_index(i: usize) -> Region {
    Region::ALL[i]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disparity::INVALID;
    use proptest::prelude::*;

    #[test]
    fn center_region_px_examples() {
        assert_eq!(center_region_px(450.0, 0.5, 1.5).unwrap(), 150);
        assert_eq!(center_region_px(450.0, 0.5, 3.0).unwrap(), 75);
        assert_eq!(center_region_px(900.0, 0.5, 1.5).unwrap(), 300);
        assert!(center_region_px(450.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn make_grid_examples() {
        let g = make_grid(640, 360, 150).unwrap();
        assert_eq!((g.x_lo, g.x_hi), (245, 395));
        assert_eq!((g.y_lo, g.y_hi), (105, 255));

        let g = make_grid(200, 200, 150).unwrap();
        assert_eq!((g.x_lo, g.x_hi), (25, 175));
        let (x0, _, x1, _) = g.rect(Region::Left);
        assert_eq!(x1 - x0, 25);

        assert!(make_grid(150, 150, 150).is_err());
        assert!(make_grid(640, 360, 0).is_err());
    }

    #[test]
    fn rects_tile_the_image() {
        let g = make_grid(64, 48, 20).unwrap();
        let mut covered = vec![0u8; 64 * 48];
        for region in Region::ALL {
            let (x0, y0, x1, y1) = g.rect(region);
            for y in y0..y1 {
                for x in x0..x1 {
                    covered[(y * 64 + x) as usize] += 1;
                    assert_eq!(g.region_of(x, y), region);
                }
            }
        }
        assert!(covered.iter().all(|&c| c == 1));
    }

    #[test]
    fn region_min_examples() {
        let g = make_grid(60, 40, 10).unwrap();
        let uniform = DepthMap::from_values(60, 40, vec![2.0; 60 * 40]);
        let depths = region_min_depths(&uniform, &g).unwrap();
        for region in Region::ALL {
            assert_eq!(depths.get(region), 2.0);
        }

        let mut with_spot = uniform.clone();
        // (3, 4) lies in the up-left rectangle of this grid.
        with_spot.set(3, 4, 0.5);
        let depths = region_min_depths(&with_spot, &g).unwrap();
        assert_eq!(depths.up_left, 0.5);
        assert_eq!(depths.center, 2.0);
        assert_eq!(depths.down_right, 2.0);
    }

    #[test]
    fn empty_regions_report_sentinel() {
        let g = make_grid(60, 40, 10).unwrap();
        let all_invalid = DepthMap::from_values(60, 40, vec![INVALID; 60 * 40]);
        let depths = region_min_depths(&all_invalid, &g).unwrap();
        for region in Region::ALL {
            assert_eq!(depths.get(region), FAR_SENTINEL_M);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let g = make_grid(60, 40, 10).unwrap();
        let depth = DepthMap::from_values(59, 40, vec![1.0; 59 * 40]);
        assert!(region_min_depths(&depth, &g).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_minima_match_brute_force(
            w in 12u32..80,
            h in 12u32..80,
            side_frac in 0.2..0.8f64,
            seed in any::<u64>(),
        ) {
            let side = ((w.min(h) as f64 * side_frac) as u32).clamp(1, w.min(h) - 3);
            let grid = make_grid(w, h, side).unwrap();

            // Deterministic pseudo-random depth map with invalid holes.
            let mut state = seed | 1;
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                state
            };
            let values: Vec<f32> = (0..w as usize * h as usize)
                .map(|_| {
                    let r = next();
                    if r % 5 == 0 { INVALID } else { 0.1 + (r % 1000) as f32 * 0.01 }
                })
                .collect();
            let depth = DepthMap::from_values(w, h, values);
            let fast = region_min_depths(&depth, &grid).unwrap();

            // Brute force by rectangle scan.
            for region in Region::ALL {
                let (x0, y0, x1, y1) = grid.rect(region);
                let mut m = f32::INFINITY;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let v = depth.get(x, y);
                        if v.is_finite() {
                            m = m.min(v);
                        }
                    }
                }
                let expected = if m.is_finite() { m } else { FAR_SENTINEL_M };
                prop_assert_eq!(fast.get(region), expected);
            }
        }
    }
}
