//! Stereo-vision obstacle avoidance: rectified stereo pairs in, steering
//! commands out.
//!
//! The pipeline stages, in data-flow order:
//!
//! - [`camera`] – rig geometry, the disparity/depth relation, epipolar
//!   residuals for rectification checks.
//! - [`image`] – 8-bit grayscale containers with binary PGM/PPM I/O.
//! - [`disparity`] – SAD block matching with winner-take-all search, plus a
//!   fused single-pass variant that also distills per-region minimum depths.
//! - [`lut`] – monotone lookup-table correction from computed to true depth.
//! - [`regions`] – the 3x3 named region grid and its minimum-depth reduction.
//! - [`fuzzy`] – a generic Mamdani inference engine (trapezoid memberships,
//!   T-norms, clipping implication, centroid / mean-of-maximum defuzzifiers).
//! - [`controller`] – the steering brain: normalized region depths in,
//!   pitch/yaw in [-1, 1] out, with a 45-degree-rotated corner controller.
//! - [`sim`] – a synthetic ray-cast stereo world and closed-loop episode
//!   runner used to exercise the whole stack end to end.

pub mod camera;
pub mod controller;
pub mod disparity;
pub mod fuzzy;
pub mod image;
pub mod lut;
pub mod regions;
pub mod sim;

pub use camera::{
    depth_from_disparity, disparity_from_depth, epipolar_residual, rectified_fundamental,
    CameraRig, FundamentalMatrix, PixelHomog,
};
pub use disparity::{
    block_match, disparity_to_depth, fused_pipeline, sad_cost, DepthMap, DisparityMap,
    MatchParams, INVALID,
};
pub use image::{GrayImage, RgbImage, StereoPair};
pub use lut::DepthLut;
pub use regions::{
    center_region_px, make_grid, region_min_depths, Region, RegionDepths, RegionGrid,
    FAR_SENTINEL_M,
};
