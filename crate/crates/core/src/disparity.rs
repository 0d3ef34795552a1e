//! SAD block-matching disparity with winner-take-all search, and the fused
//! single-pass variant that also emits per-region minimum depths.
//!
//! The matching contract, which the tests' naive reference reimplements
//! independently:
//!
//! - A left pixel (x, y) is matchable iff its window and its entire search
//!   range stay inside both images: `y in [r, h-r)`, `x in [d_max+r, w-r)`.
//!   Everything else is invalid.
//! - Winner-take-all over `d in [0, d_max]`; among equal costs the smallest
//!   disparity wins.
//! - Uniqueness: with `second` the best cost at disparities farther than
//!   1 px from the winner, the pixel is invalidated when
//!   `best >= (1 - uniqueness_ratio) * second` (computed in f64). Pixels with
//!   no such competitor pass.
//! - Left-right check (optional): a right-referenced disparity map is
//!   computed over right pixels `x in [r, w-r-d_max)` by winner-take-all
//!   with the same tie-break and the same uniqueness rule; the left pixel is
//!   invalidated when its right counterpart is missing (out of range or
//!   rejected by uniqueness) or `|d_L - d_R| > lr_consistency_px`. Running
//!   uniqueness on both passes matters around occlusion boundaries, where
//!   the groping matches of the two views can otherwise agree by luck.
//!
//! Internally the costs come from a sliding-window cost volume (exact u32
//! arithmetic, identical values to the direct window sum), computed over
//! disjoint horizontal row bands so any worker count produces bit-identical
//! output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::thread;

use crate::camera::CameraRig;
use crate::image::{GrayImage, StereoPair};
use crate::lut::DepthLut;
use crate::regions::{self, RegionDepths, RegionGrid};

/// Sentinel for pixels with no valid disparity/depth. Distinct from every
/// finite value, and absorbed for free by `min` during region reduction.
pub const INVALID: f32 = f32::INFINITY;

/// Block-matching parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct MatchParams {
    /// Half-width of the square SAD window (window side = 2r + 1).
    pub window_radius_px: u32,
    /// Inclusive upper bound of the disparity search.
    pub max_disparity_px: u32,
    /// Uniqueness margin in [0, 1); larger rejects more ambiguous matches.
    pub uniqueness_ratio: f64,
    /// Max allowed left-right disagreement in px; `None` disables the check.
    pub lr_consistency_px: Option<f64>,
}

impl Default for MatchParams {
    fn default() -> Self {
        Self {
            window_radius_px: 4,
            max_disparity_px: 64,
            uniqueness_ratio: 0.15,
            lr_consistency_px: None,
        }
    }
}

impl MatchParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.window_radius_px < 1 {
            return Err("window_radius_px must be >= 1".into());
        }
        if self.max_disparity_px < 1 {
            return Err("max_disparity_px must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.uniqueness_ratio) {
            return Err(format!(
                "uniqueness_ratio must be in [0, 1), got {}",
                self.uniqueness_ratio
            ));
        }
        if let Some(px) = self.lr_consistency_px {
            if px < 0.0 {
                return Err(format!("lr_consistency_px must be >= 0, got {px}"));
            }
        }
        Ok(())
    }
}

macro_rules! value_map {
    ($name:ident, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            width: u32,
            height: u32,
            values: Vec<f32>,
        }

        impl $name {
            pub fn from_values(width: u32, height: u32, values: Vec<f32>) -> Self {
                assert_eq!(values.len(), width as usize * height as usize);
                Self { width, height, values }
            }

            pub fn filled(width: u32, height: u32, value: f32) -> Self {
                Self::from_values(width, height, vec![value; width as usize * height as usize])
            }

            pub fn width(&self) -> u32 {
                self.width
            }

            pub fn height(&self) -> u32 {
                self.height
            }

            pub fn values(&self) -> &[f32] {
                &self.values
            }

            #[inline]
            pub fn get(&self, x: u32, y: u32) -> f32 {
                self.values[y as usize * self.width as usize + x as usize]
            }

            pub fn set(&mut self, x: u32, y: u32, v: f32) {
                self.values[y as usize * self.width as usize + x as usize] = v;
            }

            #[inline]
            pub fn is_valid(&self, x: u32, y: u32) -> bool {
                self.get(x, y).is_finite()
            }

            pub fn valid_count(&self) -> usize {
                self.values.iter().filter(|v| v.is_finite()).count()
            }
        }
    };
}

value_map!(
    DisparityMap,
    "Per-pixel disparity in pixels, or [`INVALID`] where matching failed."
);
value_map!(
    DepthMap,
    "Per-pixel depth in meters, or [`INVALID`] where no depth is known."
);

impl DepthMap {
    /// One CSV row per image row; invalid pixels serialize as `inf`.
    /// `f32` display round-trips exactly, so written maps reload bit-exact.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for row in self.values.chunks_exact(self.width as usize) {
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write!(out, "{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv_str(s: &str) -> Result<Self, String> {
        let mut values = Vec::new();
        let mut width = None;
        for (i, line) in s.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f32>, _> = line.split(',').map(|f| f.trim().parse()).collect();
            let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(format!("row {} has {} fields, expected {w}", i + 1, row.len()))
                }
                _ => {}
            }
            values.extend(row);
        }
        let width = width.ok_or("empty depth csv")?;
        let height = values.len() / width;
        Ok(Self::from_values(width as u32, height as u32, values))
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), std::io::Error> {
        fs::write(path, self.to_csv_string())
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, String> {
        Self::from_csv_str(&fs::read_to_string(path).map_err(|e| e.to_string())?)
    }
}

/// Sum of absolute differences between the left window at (x, y) and the
/// right window at (x - d, y). Panics if either window leaves its image.
pub fn sad_cost(left: &GrayImage, right: &GrayImage, x: u32, y: u32, d: u32, radius: u32) -> u32 {
    let r = radius;
    assert!(
        x >= r + d && x + r < left.width() && y >= r && y + r < left.height(),
        "SAD window at ({x}, {y}) with d={d}, radius={r} leaves the image"
    );
    let mut sum = 0u32;
    for yy in y - r..=y + r {
        for xx in x - r..=x + r {
            let a = left.get(xx, yy);
            let b = right.get(xx - d, yy);
            sum += a.abs_diff(b) as u32;
        }
    }
    sum
}

/// Winner-take-all block matching over the whole pair. `workers = 0` uses
/// all available parallelism; any worker count gives bit-identical output.
pub fn block_match(pair: &StereoPair, params: &MatchParams, workers: usize) -> DisparityMap {
    assert_preconditions(pair, params);
    let w = pair.left.width() as usize;
    let h = pair.left.height() as usize;
    let r = params.window_radius_px as usize;

    let mut values = vec![INVALID; w * h];
    let (y_lo, y_hi) = valid_row_range(h, r);
    if y_lo < y_hi {
        let bands = band_ranges(y_lo, y_hi, resolve_workers(workers));
        let slices = split_rows(&mut values[y_lo * w..y_hi * w], w, &bands);
        thread::scope(|s| {
            for ((b0, b1), out) in bands.iter().copied().zip(slices) {
                s.spawn(move || {
                    match_rows(&pair.left, &pair.right, params, b0, b1, &mut |y, row| {
                        out[(y - b0) * w..(y - b0 + 1) * w].copy_from_slice(row);
                    });
                });
            }
        });
    }
    DisparityMap::from_values(w as u32, h as u32, values)
}

/// Applies the disparity/depth relation per valid pixel; invalid and
/// zero-disparity pixels map to invalid.
pub fn disparity_to_depth(map: &DisparityMap, rig: &CameraRig) -> DepthMap {
    let values = map.values().iter().map(|&d| pixel_depth(d, rig)).collect();
    DepthMap::from_values(map.width(), map.height(), values)
}

#[inline]
fn pixel_depth(d: f32, rig: &CameraRig) -> f32 {
    if d.is_finite() && d > 0.0 {
        (rig.baseline_m * rig.focal_px / d as f64) as f32
    } else {
        INVALID
    }
}

/// Matches, converts to depth, refines, and reduces to region minima in a
/// single pass over pixels, with a running per-region minimum per row band.
/// Output is bit-identical to the unfused composition
/// `block_match -> disparity_to_depth -> refine_map -> region_min_depths`
/// for every worker count.
pub fn fused_pipeline(
    pair: &StereoPair,
    params: &MatchParams,
    grid: &RegionGrid,
    lut: &DepthLut,
    workers: usize,
) -> (DepthMap, RegionDepths) {
    assert_preconditions(pair, params);
    let w = pair.left.width() as usize;
    let h = pair.left.height() as usize;
    assert!(
        grid.width_px as usize == w && grid.height_px as usize == h,
        "region grid {}x{} does not match image {}x{}",
        grid.width_px,
        grid.height_px,
        w,
        h
    );
    let r = params.window_radius_px as usize;
    let rig = &pair.rig;

    let mut values = vec![INVALID; w * h];
    let mut minima = [f32::INFINITY; 9];
    let (y_lo, y_hi) = valid_row_range(h, r);
    if y_lo < y_hi {
        let bands = band_ranges(y_lo, y_hi, resolve_workers(workers));
        let slices = split_rows(&mut values[y_lo * w..y_hi * w], w, &bands);
        let band_minima = thread::scope(|s| {
            let handles: Vec<_> = bands
                .iter()
                .copied()
                .zip(slices)
                .map(|((b0, b1), out)| {
                    s.spawn(move || {
                        let mut local = [f32::INFINITY; 9];
                        let mut depth_row = vec![INVALID; w];
                        match_rows(&pair.left, &pair.right, params, b0, b1, &mut |y, row| {
                            for (dst, &d) in depth_row.iter_mut().zip(row) {
                                let z = pixel_depth(d, rig);
                                *dst = if z.is_finite() {
                                    lut.refine_unchecked(z as f64) as f32
                                } else {
                                    INVALID
                                };
                            }
                            out[(y - b0) * w..(y - b0 + 1) * w].copy_from_slice(&depth_row);
                            regions::accumulate_row_minima(&depth_row, w, y, grid, &mut local);
                        });
                        local
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect::<Vec<_>>()
        });
        for band in &band_minima {
            regions::merge_minima(&mut minima, band);
        }
    }
    let depth = DepthMap::from_values(w as u32, h as u32, values);
    (depth, regions::finish_minima(minima))
}

fn assert_preconditions(pair: &StereoPair, params: &MatchParams) {
    params.validate().expect("invalid match params");
    let win = 2 * params.window_radius_px + 1;
    assert!(
        pair.left.width() >= win && pair.left.height() >= win,
        "pair {}x{} smaller than the {win}x{win} window",
        pair.left.width(),
        pair.left.height()
    );
    assert!(
        params.max_disparity_px < pair.left.width(),
        "max_disparity_px {} must be < image width {}",
        params.max_disparity_px,
        pair.left.width()
    );
}

fn valid_row_range(h: usize, r: usize) -> (usize, usize) {
    if h > 2 * r {
        (r, h - r)
    } else {
        (0, 0)
    }
}

fn resolve_workers(workers: usize) -> usize {
    if workers == 0 {
        thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    } else {
        workers
    }
}

fn band_ranges(y_lo: usize, y_hi: usize, workers: usize) -> Vec<(usize, usize)> {
    let rows = y_hi - y_lo;
    let n = workers.max(1).min(rows);
    let base = rows / n;
    let rem = rows % n;
    let mut out = Vec::with_capacity(n);
    let mut y = y_lo;
    for b in 0..n {
        let height = base + usize::from(b < rem);
        out.push((y, y + height));
        y += height;
    }
    out
}

fn split_rows<'a>(mut region: &'a mut [f32], w: usize, bands: &[(usize, usize)]) -> Vec<&'a mut [f32]> {
    let mut out = Vec::with_capacity(bands.len());
    for &(b0, b1) in bands {
        let (head, tail) = region.split_at_mut((b1 - b0) * w);
        out.push(head);
        region = tail;
    }
    out
}

/// Rows per cost-volume chunk; bounds per-band scratch memory at roughly
/// `CHUNK_ROWS * (d_max + 1) * width` u32s.
const CHUNK_ROWS: usize = 32;

/// Computes final disparities for output rows `[y0, y1)` and hands each row
/// (full image width, borders invalid) to `on_row` in order.
fn match_rows(
    left: &GrayImage,
    right: &GrayImage,
    p: &MatchParams,
    y0: usize,
    y1: usize,
    on_row: &mut dyn FnMut(usize, &[f32]),
) {
    let w = left.width() as usize;
    let r = p.window_radius_px as usize;
    let dmax = p.max_disparity_px as usize;
    let win = 2 * r + 1;
    let x_hi = w - r;

    let mut slab = vec![0u32; CHUNK_ROWS * (dmax + 1) * w];
    let mut hs_ring = vec![vec![0u32; w]; win];
    let mut vsum = vec![0u32; w];
    let mut best_cost = vec![u32::MAX; w];
    let mut best_d = vec![0u16; w];
    let mut second = vec![u32::MAX; w];
    let mut rbest_cost = vec![u32::MAX; w];
    let mut rbest_d = vec![0u16; w];
    let mut rsecond = vec![u32::MAX; w];
    let mut out_row = vec![INVALID; w];

    let mut cy0 = y0;
    while cy0 < y1 {
        let cy1 = (cy0 + CHUNK_ROWS).min(y1);
        let chunk = cy1 - cy0;

        // Cost volume for the chunk: slab[(yi * (dmax+1) + d) * w + x] holds
        // the window SAD at (x, cy0 + yi, d); defined for x in [d+r, w-r).
        for d in 0..=dmax {
            if d + win > w {
                continue;
            }
            let x_lo_d = d + r;
            for yy in cy0 - r..=cy0 + r {
                let slot = yy % win;
                hs_row(left.row(yy), right.row(yy), d, r, &mut hs_ring[slot]);
            }
            for x in x_lo_d..x_hi {
                vsum[x] = hs_ring.iter().map(|row| row[x]).sum();
            }
            slab[d * w + x_lo_d..d * w + x_hi].copy_from_slice(&vsum[x_lo_d..x_hi]);
            for yi in 1..chunk {
                let y = cy0 + yi;
                let slot = (y + r) % win;
                // The incoming row reuses the slot of the one leaving the
                // vertical window, so subtract before overwriting.
                {
                    let old = &hs_ring[slot];
                    for x in x_lo_d..x_hi {
                        vsum[x] -= old[x];
                    }
                }
                hs_row(left.row(y + r), right.row(y + r), d, r, &mut hs_ring[slot]);
                {
                    let new = &hs_ring[slot];
                    for x in x_lo_d..x_hi {
                        vsum[x] += new[x];
                    }
                }
                let base = (yi * (dmax + 1) + d) * w;
                slab[base + x_lo_d..base + x_hi].copy_from_slice(&vsum[x_lo_d..x_hi]);
            }
        }

        // Winner-take-all per row.
        for yi in 0..chunk {
            let y = cy0 + yi;
            let slab_row = &slab[yi * (dmax + 1) * w..(yi + 1) * (dmax + 1) * w];
            out_row.fill(INVALID);

            let x_lo = dmax + r;
            if x_lo < x_hi {
                best_cost[x_lo..x_hi].fill(u32::MAX);
                for d in 0..=dmax {
                    let costs = &slab_row[d * w..d * w + w];
                    for x in x_lo..x_hi {
                        // Strict comparison over ascending d keeps the
                        // smallest disparity among equal costs.
                        if costs[x] < best_cost[x] {
                            best_cost[x] = costs[x];
                            best_d[x] = d as u16;
                        }
                    }
                }
                second[x_lo..x_hi].fill(u32::MAX);
                for d in 0..=dmax {
                    let costs = &slab_row[d * w..d * w + w];
                    for x in x_lo..x_hi {
                        if (d as i64 - best_d[x] as i64).abs() > 1 && costs[x] < second[x] {
                            second[x] = costs[x];
                        }
                    }
                }

                let rx_range = if p.lr_consistency_px.is_some() {
                    // Right-referenced pass: SAD of right pixel x against
                    // left pixel x + d equals the left cost at (x + d, d).
                    let rx_lo = r;
                    let rx_hi = x_hi.saturating_sub(dmax);
                    if rx_lo < rx_hi {
                        rbest_cost[rx_lo..rx_hi].fill(u32::MAX);
                        for d in 0..=dmax {
                            let costs = &slab_row[d * w..d * w + w];
                            for rx in rx_lo..rx_hi {
                                if costs[rx + d] < rbest_cost[rx] {
                                    rbest_cost[rx] = costs[rx + d];
                                    rbest_d[rx] = d as u16;
                                }
                            }
                        }
                        rsecond[rx_lo..rx_hi].fill(u32::MAX);
                        for d in 0..=dmax {
                            let costs = &slab_row[d * w..d * w + w];
                            for rx in rx_lo..rx_hi {
                                if (d as i64 - rbest_d[rx] as i64).abs() > 1
                                    && costs[rx + d] < rsecond[rx]
                                {
                                    rsecond[rx] = costs[rx + d];
                                }
                            }
                        }
                        for rx in rx_lo..rx_hi {
                            if rsecond[rx] != u32::MAX
                                && rbest_cost[rx] as f64
                                    >= (1.0 - p.uniqueness_ratio) * rsecond[rx] as f64
                            {
                                rbest_cost[rx] = u32::MAX;
                            }
                        }
                    }
                    Some((rx_lo, rx_hi))
                } else {
                    None
                };

                for x in x_lo..x_hi {
                    let d = best_d[x];
                    if second[x] != u32::MAX
                        && best_cost[x] as f64 >= (1.0 - p.uniqueness_ratio) * second[x] as f64
                    {
                        continue;
                    }
                    if let (Some(thresh), Some((rx_lo, rx_hi))) = (p.lr_consistency_px, rx_range) {
                        let rx = x - d as usize;
                        // A missing right-referenced value counts as
                        // disagreement.
                        if rx < rx_lo || rx >= rx_hi || rbest_cost[rx] == u32::MAX {
                            continue;
                        }
                        if (d as f64 - rbest_d[rx] as f64).abs() > thresh {
                            continue;
                        }
                    }
                    out_row[x] = d as f32;
                }
            }
            on_row(y, &out_row);
        }
        cy0 = cy1;
    }
}

/// Horizontal window sums of |left - right@d| for one row:
/// `out[x] = sum_{i=-r..=r} |L(x+i) - R(x+i-d)|`, defined for x in [d+r, w-r).
#[inline]
fn hs_row(left_row: &[u8], right_row: &[u8], d: usize, r: usize, out: &mut [u32]) {
    let w = left_row.len();
    let mut acc = 0u32;
    for x in d..d + 2 * r + 1 {
        acc += left_row[x].abs_diff(right_row[x - d]) as u32;
    }
    out[d + r] = acc;
    for x in d + r + 1..w - r {
        acc += left_row[x + r].abs_diff(right_row[x + r - d]) as u32;
        acc -= left_row[x - r - 1].abs_diff(right_row[x - r - 1 - d]) as u32;
        out[x] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::DepthLut;
    use crate::regions::{make_grid, Region, FAR_SENTINEL_M};

    fn texture(seed: u64, x: u32, y: u32) -> u8 {
        let mut h = seed ^ (x as u64).wrapping_mul(0x9E3779B97F4A7C15) ^ (y as u64).wrapping_mul(0xC2B2AE3D27D4EB4F);
        h ^= h >> 33;
        h = h.wrapping_mul(0xFF51AFD7ED558CCD);
        h ^= h >> 33;
        h as u8
    }

    fn rig(w: u32, h: u32) -> CameraRig {
        CameraRig::centered(0.12, 450.0, w, h).unwrap()
    }

    /// Pair with true disparity `shift` everywhere: the feature at left
    /// pixel x sits at right pixel x - shift, i.e. right(x) = tex(x + shift).
    fn shifted_pair(w: u32, h: u32, shift: u32, seed: u64) -> StereoPair {
        let left = GrayImage::from_fn(w, h, |x, y| texture(seed, x, y));
        let right = GrayImage::from_fn(w, h, |x, y| texture(seed, x + shift, y));
        StereoPair::new(left, right, rig(w, h)).unwrap()
    }

    #[test]
    fn sad_cost_examples() {
        let a = GrayImage::from_fn(8, 8, |_, _| 10);
        let b = GrayImage::from_fn(8, 8, |_, _| 12);
        assert_eq!(sad_cost(&a, &a, 4, 4, 0, 1), 0);
        assert_eq!(sad_cost(&a, &b, 4, 4, 0, 1), 18);
        assert_eq!(sad_cost(&a, &b, 4, 4, 2, 2), 2 * 25);
    }

    #[test]
    #[should_panic(expected = "leaves the image")]
    fn sad_cost_rejects_out_of_bounds_window() {
        let img = GrayImage::new(8, 8);
        sad_cost(&img, &img, 1, 4, 2, 1);
    }

    #[test]
    fn block_match_recovers_constant_shift() {
        let pair = shifted_pair(96, 48, 8, 7);
        let params = MatchParams {
            window_radius_px: 3,
            max_disparity_px: 16,
            ..MatchParams::default()
        };
        let disp = block_match(&pair, &params, 1);
        let mut valid = 0usize;
        let mut correct = 0usize;
        for y in 3..45 {
            for x in 19..93 {
                let v = disp.get(x, y);
                if v.is_finite() {
                    valid += 1;
                    if v == 8.0 {
                        correct += 1;
                    }
                }
            }
        }
        assert!(valid > 1000, "expected mostly valid pixels, got {valid}");
        assert_eq!(correct, valid, "every valid pixel should equal the true shift");
    }

    #[test]
    fn uniform_pair_is_all_invalid() {
        let left = GrayImage::from_fn(32, 32, |_, _| 127);
        let pair = StereoPair::new(left.clone(), left, rig(32, 32)).unwrap();
        let params = MatchParams {
            window_radius_px: 2,
            max_disparity_px: 8,
            uniqueness_ratio: 0.15,
            lr_consistency_px: None,
        };
        let disp = block_match(&pair, &params, 1);
        assert_eq!(disp.valid_count(), 0);
    }

    /// Independent right-referenced disparity: winner-take-all of the right
    /// window at x against left windows at x + d, with the same smallest-d
    /// tie-break and uniqueness rule as the left pass. `None` when the
    /// uniqueness test rejects the winner.
    fn naive_right_disparity(
        pair: &StereoPair,
        x: u32,
        y: u32,
        dmax: u32,
        r: u32,
        uniqueness: f64,
    ) -> Option<u32> {
        let cost_at = |d: u32| -> u32 {
            let mut cost = 0u32;
            for yy in y - r..=y + r {
                for i in 0..2 * r + 1 {
                    let a = pair.right.get(x - r + i, yy);
                    let b = pair.left.get(x + d - r + i, yy);
                    cost += a.abs_diff(b) as u32;
                }
            }
            cost
        };
        let mut best = u32::MAX;
        let mut best_d = 0;
        for d in 0..=dmax {
            let c = cost_at(d);
            if c < best {
                best = c;
                best_d = d;
            }
        }
        let mut second = u32::MAX;
        for d in 0..=dmax {
            if (d as i64 - best_d as i64).abs() > 1 {
                second = second.min(cost_at(d));
            }
        }
        if second != u32::MAX && best as f64 >= (1.0 - uniqueness) * second as f64 {
            None
        } else {
            Some(best_d)
        }
    }

    #[test]
    fn lr_check_invalidates_exactly_the_disagreeing_pixels() {
        // True shift 8 but the search stops at 4: neither pass can find the
        // real correspondence, and wherever the two passes disagree by more
        // than the threshold the pixel must come out invalid.
        let pair = shifted_pair(64, 24, 8, 11);
        let (r, dmax) = (3u32, 4u32);
        let params = MatchParams {
            window_radius_px: r,
            max_disparity_px: dmax,
            uniqueness_ratio: 0.0,
            lr_consistency_px: Some(1.0),
        };
        let checked = block_match(&pair, &params, 1);
        let unchecked = block_match(&pair, &MatchParams { lr_consistency_px: None, ..params }, 1);

        let mut disagreements = 0usize;
        for y in r..24 - r {
            for x in dmax + r..64 - r {
                let before = unchecked.get(x, y);
                if !before.is_finite() {
                    assert!(!checked.is_valid(x, y));
                    continue;
                }
                let d = before as u32;
                let rx = x - d;
                let agreed = if rx >= r && rx < 64 - r - dmax {
                    match naive_right_disparity(&pair, rx, y, dmax, r, 0.0) {
                        Some(rd) => (d as f64 - rd as f64).abs() <= 1.0,
                        None => false,
                    }
                } else {
                    false
                };
                assert_eq!(
                    checked.is_valid(x, y),
                    agreed,
                    "({x},{y}): d={d}, LR agreement {agreed}"
                );
                if !agreed {
                    disagreements += 1;
                }
            }
        }
        assert!(disagreements > 50, "test scene too easy: {disagreements} disagreements");
    }

    #[test]
    fn ties_resolve_to_smallest_disparity() {
        // At x = 4 the costs over d = 0..=3 are 33, 6, 6, 33 (hand-computed):
        // a tie between d = 1 and d = 2 inside the +-1 uniqueness exclusion,
        // with the next competitor far enough away to keep the pixel valid.
        let l_row = [0u8, 0, 0, 7, 9, 9, 0, 0];
        let r_row = [0u8, 5, 9, 9, 9, 0, 0, 0];
        let left = GrayImage::from_fn(8, 3, |x, _| l_row[x as usize]);
        let right = GrayImage::from_fn(8, 3, |x, _| r_row[x as usize]);
        let pair = StereoPair::new(left, right, rig(8, 3)).unwrap();
        let params = MatchParams {
            window_radius_px: 1,
            max_disparity_px: 3,
            uniqueness_ratio: 0.15,
            lr_consistency_px: None,
        };
        let disp = block_match(&pair, &params, 1);
        assert_eq!(disp.get(4, 1), 1.0);
    }

    #[test]
    fn costs_match_direct_sad_on_samples() {
        let pair = shifted_pair(64, 32, 5, 3);
        let params = MatchParams {
            window_radius_px: 2,
            max_disparity_px: 10,
            uniqueness_ratio: 0.0,
            lr_consistency_px: None,
        };
        let disp = block_match(&pair, &params, 1);
        for y in [2u32, 9, 17, 29] {
            for x in [12u32, 30, 47, 61] {
                let v = disp.get(x, y);
                if !v.is_finite() {
                    continue;
                }
                let winner = v as u32;
                let wcost = sad_cost(&pair.left, &pair.right, x, y, winner, 2);
                for d in 0..=10 {
                    let c = sad_cost(&pair.left, &pair.right, x, y, d, 2);
                    assert!(
                        c > wcost || (c == wcost && d >= winner),
                        "({x},{y}): d={d} cost {c} beats winner {winner} cost {wcost}"
                    );
                }
            }
        }
    }

    #[test]
    fn disparity_to_depth_examples() {
        let map = DisparityMap::filled(16, 8, 36.0);
        let depth = disparity_to_depth(&map, &rig(16, 8));
        assert!(depth.values().iter().all(|&z| z == 1.5));

        let mut with_holes = DisparityMap::filled(4, 4, 54.0);
        with_holes.set(1, 1, INVALID);
        with_holes.set(2, 2, 0.0);
        let depth = disparity_to_depth(&with_holes, &rig(4, 4));
        assert_eq!(depth.get(0, 0), 1.0);
        assert!(!depth.is_valid(1, 1));
        assert!(!depth.is_valid(2, 2));
    }

    #[test]
    fn fused_matches_unfused_composition_for_any_worker_count() {
        let pair = shifted_pair(120, 72, 6, 21);
        let params = MatchParams {
            window_radius_px: 3,
            max_disparity_px: 12,
            uniqueness_ratio: 0.15,
            lr_consistency_px: Some(1.0),
        };
        let grid = make_grid(120, 72, 30).unwrap();
        let lut = DepthLut::build(&[(0.5, 0.55), (2.0, 2.1), (5.0, 5.4)]).unwrap();

        let disp = block_match(&pair, &params, 1);
        let refined = lut.refine_map(&disparity_to_depth(&disp, &pair.rig));
        let expected_regions = crate::regions::region_min_depths(&refined, &grid).unwrap();

        for workers in [1, 2, 4, 8] {
            let (depth, regions) = fused_pipeline(&pair, &params, &grid, &lut, workers);
            assert_eq!(depth, refined, "depth mismatch at {workers} workers");
            assert_eq!(regions, expected_regions, "region mismatch at {workers} workers");
        }
    }

    #[test]
    fn fused_reports_sentinel_for_textureless_scene() {
        let left = GrayImage::from_fn(64, 48, |_, _| 90);
        let pair = StereoPair::new(left.clone(), left, rig(64, 48)).unwrap();
        let params = MatchParams {
            window_radius_px: 2,
            max_disparity_px: 8,
            ..MatchParams::default()
        };
        let grid = make_grid(64, 48, 16).unwrap();
        let (_, regions) = fused_pipeline(&pair, &params, &grid, &DepthLut::identity(), 2);
        for region in Region::ALL {
            assert_eq!(regions.get(region), FAR_SENTINEL_M);
        }
    }

    #[test]
    fn depth_csv_round_trip() {
        let mut depth = DepthMap::filled(5, 3, 1.25);
        depth.set(2, 1, INVALID);
        depth.set(4, 2, 0.30000001);
        let back = DepthMap::from_csv_str(&depth.to_csv_string()).unwrap();
        assert_eq!(depth, back);
    }
}
