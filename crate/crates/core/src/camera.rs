//! Camera geometry for a rectified stereo rig.
//!
//! Depth and disparity are related by `d = B * f / z`: the disparity of a
//! point is inversely proportional to its distance from the camera plane.
//! Inputs to the pipeline are assumed rectified; [`epipolar_residual`]
//! together with [`rectified_fundamental`] gives a cheap validation that a
//! set of correspondences actually satisfies that assumption.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("disparity must be positive, got {0} (zero disparity means infinite depth)")]
    InvalidDisparity(f64),
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("invalid camera rig: {0}")]
    InvalidRig(String),
    #[error("rig json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Intrinsics and stereo geometry of the rig.
///
/// `baseline_m` is the distance between the two camera centers and
/// `focal_px` the focal length expressed in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub baseline_m: f64,
    pub focal_px: f64,
    pub principal_x_px: f64,
    pub principal_y_px: f64,
    pub width_px: u32,
    pub height_px: u32,
}

impl CameraRig {
    pub fn new(
        baseline_m: f64,
        focal_px: f64,
        principal_x_px: f64,
        principal_y_px: f64,
        width_px: u32,
        height_px: u32,
    ) -> Result<Self, CameraError> {
        let rig = Self {
            baseline_m,
            focal_px,
            principal_x_px,
            principal_y_px,
            width_px,
            height_px,
        };
        rig.validate()?;
        Ok(rig)
    }

    /// Rig with the principal point at the image center.
    pub fn centered(
        baseline_m: f64,
        focal_px: f64,
        width_px: u32,
        height_px: u32,
    ) -> Result<Self, CameraError> {
        Self::new(
            baseline_m,
            focal_px,
            width_px as f64 / 2.0,
            height_px as f64 / 2.0,
            width_px,
            height_px,
        )
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.baseline_m > 0.0) {
            return Err(CameraError::InvalidRig(format!(
                "baseline_m must be > 0, got {}",
                self.baseline_m
            )));
        }
        if !(self.focal_px > 0.0) {
            return Err(CameraError::InvalidRig(format!(
                "focal_px must be > 0, got {}",
                self.focal_px
            )));
        }
        if self.width_px == 0 || self.height_px == 0 {
            return Err(CameraError::InvalidRig("image dimensions must be nonzero".into()));
        }
        if !(0.0..self.width_px as f64).contains(&self.principal_x_px) {
            return Err(CameraError::InvalidRig(format!(
                "principal_x_px {} outside [0, {})",
                self.principal_x_px, self.width_px
            )));
        }
        if !(0.0..self.height_px as f64).contains(&self.principal_y_px) {
            return Err(CameraError::InvalidRig(format!(
                "principal_y_px {} outside [0, {})",
                self.principal_y_px, self.height_px
            )));
        }
        Ok(())
    }

    /// Loads a rig from a JSON object with keys `baseline_m`, `focal_px`,
    /// `principal_x_px`, `principal_y_px`, `width_px`, `height_px`.
    pub fn from_json_str(s: &str) -> Result<Self, CameraError> {
        let rig: Self = serde_json::from_str(s)?;
        rig.validate()?;
        Ok(rig)
    }
}

/// Depth in meters of a point with disparity `d_px` (pixels).
pub fn depth_from_disparity(d_px: f64, rig: &CameraRig) -> Result<f64, CameraError> {
    if !(d_px > 0.0) {
        return Err(CameraError::InvalidDisparity(d_px));
    }
    Ok(rig.baseline_m * rig.focal_px / d_px)
}

/// Disparity in pixels of a point at depth `z_m` (meters). Round-trips with
/// [`depth_from_disparity`].
pub fn disparity_from_depth(z_m: f64, rig: &CameraRig) -> Result<f64, CameraError> {
    if !(z_m > 0.0) {
        return Err(CameraError::InvalidDepth(z_m));
    }
    Ok(rig.baseline_m * rig.focal_px / z_m)
}

/// Homogeneous pixel coordinates. `w` must be nonzero for finite pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelHomog {
    pub x: f64,
    pub y: f64,
    pub w: f64,
}

impl PixelHomog {
    /// Finite pixel at `(x, y)` with `w = 1`.
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, w: 1.0 }
    }

    /// Scales so that `w = 1`. Panics on `w = 0` (a point at infinity has no
    /// finite normalization).
    pub fn normalized(&self) -> Self {
        assert!(self.w != 0.0, "cannot normalize a pixel with w = 0");
        Self {
            x: self.x / self.w,
            y: self.y / self.w,
            w: 1.0,
        }
    }
}

/// 3x3 fundamental matrix, row-major. Rank <= 2 by construction for any
/// valid epipolar geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalMatrix(pub [f64; 9]);

impl FundamentalMatrix {
    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }
}

/// The canonical fundamental matrix of an ideally rectified pair:
/// `[[0,0,0],[0,0,-1],[0,1,0]]`, for which the residual reduces to `y1 - y2`.
pub fn rectified_fundamental() -> FundamentalMatrix {
    FundamentalMatrix([0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0])
}

/// The epipolar residual `m2^T F m1`; zero iff the pair of pixels satisfies
/// the epipolar constraint. Inputs are normalized to `w = 1` first so that
/// residual magnitudes stay comparable across points.
pub fn epipolar_residual(m1: &PixelHomog, m2: &PixelHomog, f: &FundamentalMatrix) -> f64 {
    let m1 = m1.normalized();
    let m2 = m2.normalized();
    let m = &f.0;
    let fx = m[0] * m1.x + m[1] * m1.y + m[2] * m1.w;
    let fy = m[3] * m1.x + m[4] * m1.y + m[5] * m1.w;
    let fw = m[6] * m1.x + m[7] * m1.y + m[8] * m1.w;
    m2.x * fx + m2.y * fy + m2.w * fw
}
