//! Ray-cast stereo rendering with deterministic hash textures.
//!
//! Both cameras share orientation and differ only by a baseline offset along
//! the camera-right axis, so rendered pairs are ideally rectified: a scene
//! point projects to the same row in both views. Surface intensity is a hash
//! of the quantized hit point and the box seed, which gives block matching
//! the dense view-invariant texture it needs. All randomness (texture and
//! optional additive Gaussian noise) is derived per pixel from hashes, so
//! images are bit-identical for a given (scene, state, rig, stddev, seed)
//! regardless of how many threads render them.

use std::thread;

use super::scene::{Scene, Vec3};
use super::vehicle::VehicleState;
use crate::camera::CameraRig;
use crate::disparity::{DepthMap, INVALID};
use crate::image::{GrayImage, StereoPair};

/// Uniform background intensity for rays that miss every box.
pub const SKY_INTENSITY: u8 = 176;

/// Fine texture cell edge in meters. Also the scale of the off-face nudge
/// applied before quantizing hit points.
const TEXTURE_CELL_M: f64 = 0.01;

/// Texture octaves. Multiple scales keep surfaces matchable over the whole
/// working range: fine cells discriminate close up and coarse cells carry
/// structure at long range. Each octave fades out as its cells approach the
/// pixel footprint on the surface; below that an octave would alias into
/// independent per-pixel noise in each view, and aliased noise produces
/// rare high-disparity false matches that poison region minima. The x3
/// spacing against the x3 fade-in threshold guarantees the finest active
/// octave always projects to 3..9 px cells, so no SAD window ever sees a
/// uniform patch (uniform patches collide in intensity across unrelated
/// disparities).
const TEXTURE_OCTAVE_CELLS_M: [f64; 6] = [0.01, 0.03, 0.09, 0.27, 0.81, 2.43];

/// A posed pinhole camera: orthonormal right/down/forward basis.
#[derive(Debug, Clone, Copy)]
pub struct CameraPose {
    pub eye: Vec3,
    pub right: Vec3,
    pub down: Vec3,
    pub forward: Vec3,
}

impl CameraPose {
    /// Left camera at the vehicle position looking along its heading.
    pub fn left_of(state: &VehicleState) -> Self {
        let forward = state.forward();
        let right = state.right();
        let down = cross(forward, right);
        Self { eye: state.position, right, down, forward }
    }

    /// Right camera: the left pose displaced one baseline along camera-right.
    pub fn right_of(state: &VehicleState, rig: &CameraRig) -> Self {
        let mut pose = Self::left_of(state);
        for i in 0..3 {
            pose.eye[i] += rig.baseline_m * pose.right[i];
        }
        pose
    }

    /// Projects a world point; `None` behind the camera. Returns continuous
    /// pixel coordinates and the camera-plane depth.
    pub fn project(&self, rig: &CameraRig, p: Vec3) -> Option<(f64, f64, f64)> {
        let q = [p[0] - self.eye[0], p[1] - self.eye[1], p[2] - self.eye[2]];
        let z = dot(q, self.forward);
        if z <= 0.0 {
            return None;
        }
        let u = rig.focal_px * dot(q, self.right) / z + rig.principal_x_px;
        let v = rig.focal_px * dot(q, self.down) / z + rig.principal_y_px;
        Some((u, v, z))
    }

    /// Ray through the center of pixel (px, py). The direction has unit
    /// forward component, so the ray parameter of a hit equals its
    /// camera-plane depth.
    pub fn pixel_ray(&self, rig: &CameraRig, px: u32, py: u32) -> Vec3 {
        let a = (px as f64 + 0.5 - rig.principal_x_px) / rig.focal_px;
        let b = (py as f64 + 0.5 - rig.principal_y_px) / rig.focal_px;
        [
            self.right[0] * a + self.down[0] * b + self.forward[0],
            self.right[1] * a + self.down[1] * b + self.forward[1],
            self.right[2] * a + self.down[2] * b + self.forward[2],
        ]
    }
}

/// Renders the rectified pair seen from `state`. Gaussian noise of the given
/// stddev (in intensity levels) is added per pixel when nonzero.
pub fn render_stereo(
    scene: &Scene,
    state: &VehicleState,
    rig: &CameraRig,
    noise_stddev: f64,
    seed: u64,
) -> StereoPair {
    let left = render_view(scene, &CameraPose::left_of(state), rig, noise_stddev, seed, 0);
    let right = render_view(scene, &CameraPose::right_of(state, rig), rig, noise_stddev, seed, 1);
    StereoPair::new(left, right, *rig).expect("rendered views match the rig")
}

/// Camera-plane depth of the nearest hit per left-camera pixel; sky pixels
/// are invalid.
pub fn ground_truth_depth(scene: &Scene, state: &VehicleState, rig: &CameraRig) -> DepthMap {
    let pose = CameraPose::left_of(state);
    let w = rig.width_px;
    let h = rig.height_px;
    let mut values = vec![INVALID; w as usize * h as usize];
    for_rows_parallel(&mut values, w as usize, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let dir = pose.pixel_ray(rig, x as u32, y as u32);
            if let Some((t, _, _)) = scene.raycast(pose.eye, dir) {
                *out = t as f32;
            }
        }
    });
    DepthMap::from_values(w, h, values)
}

fn render_view(
    scene: &Scene,
    pose: &CameraPose,
    rig: &CameraRig,
    noise_stddev: f64,
    seed: u64,
    camera_id: u64,
) -> GrayImage {
    let w = rig.width_px;
    let h = rig.height_px;
    let mut pixels = vec![0u8; w as usize * h as usize];
    for_rows_parallel(&mut pixels, w as usize, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let dir = pose.pixel_ray(rig, x as u32, y as u32);
            let base = match scene.raycast(pose.eye, dir) {
                Some((t, box_idx, axis)) => {
                    let mut p = [
                        pose.eye[0] + t * dir[0],
                        pose.eye[1] + t * dir[1],
                        pose.eye[2] + t * dir[2],
                    ];
                    // Nudge off the hit face so the quantized cell of the
                    // face-constant coordinate cannot flip between the two
                    // views' rounding of the same surface point.
                    p[axis] += dir[axis].signum() * TEXTURE_CELL_M * 0.5;
                    let footprint = pixel_footprint_m(rig, t, dir, axis);
                    texture_intensity(scene.boxes[box_idx].seed, p, footprint)
                }
                None => SKY_INTENSITY,
            };
            *out = if noise_stddev > 0.0 {
                let n = gaussian_from_hash(mix4(seed, camera_id, x as u64, y as u64));
                (base as f64 + noise_stddev * n).round().clamp(0.0, 255.0) as u8
            } else {
                base
            };
        }
    });
    GrayImage::from_pixels(w, h, pixels).expect("sized buffer")
}

/// Extent in meters of one pixel projected onto the hit surface, accounting
/// for the grazing angle against the face normal. Depends only on the pixel
/// ray and the camera-plane depth, which both views agree on for a shared
/// surface point up to sub-percent ray-length differences.
fn pixel_footprint_m(rig: &CameraRig, z: f64, dir: Vec3, face_axis: usize) -> f64 {
    let len = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
    let cos = dir[face_axis].abs() / len;
    (z / rig.focal_px) * len / cos.max(1e-6)
}

fn texture_intensity(seed: u64, p: Vec3, footprint_m: f64) -> u8 {
    let cell = |scale: f64, salt: u64| -> u64 {
        mix4(
            seed ^ salt,
            (p[0] / scale).floor() as i64 as u64,
            (p[1] / scale).floor() as i64 as u64,
            (p[2] / scale).floor() as i64 as u64,
        )
    };
    let mut sum = 0.0;
    for (i, &scale) in TEXTURE_OCTAVE_CELLS_M.iter().enumerate() {
        // Fully on for cells at least 3 footprints wide, gone below 1.5.
        let w = ((scale / footprint_m - 1.5) / 1.5).clamp(0.0, 1.0);
        if w > 0.0 {
            sum += w * (cell(scale, i as u64) % 42) as f64;
        }
    }
    sum.round() as u8
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

pub(crate) fn mix4(a: u64, b: u64, c: u64, d: u64) -> u64 {
    splitmix(splitmix(splitmix(splitmix(a) ^ b) ^ c) ^ d)
}

/// Standard normal sample via Box-Muller on two hash-derived uniforms.
fn gaussian_from_hash(h: u64) -> f64 {
    let u1 = ((h >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = ((splitmix(h) >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Runs `fill(y, row)` for every row, split contiguously across available
/// threads. Safe for any per-pixel-deterministic fill.
fn for_rows_parallel<T: Send>(buf: &mut [T], width: usize, fill: impl Fn(usize, &mut [T]) + Sync) {
    let rows = buf.len() / width;
    let workers = thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(rows.max(1));
    if workers <= 1 {
        for (y, row) in buf.chunks_mut(width).enumerate() {
            fill(y, row);
        }
        return;
    }
    let base = rows / workers;
    let rem = rows % workers;
    thread::scope(|s| {
        let mut rest = buf;
        let mut y0 = 0usize;
        for b in 0..workers {
            let height = base + usize::from(b < rem);
            let (head, tail) = rest.split_at_mut(height * width);
            rest = tail;
            let fill = &fill;
            s.spawn(move || {
                for (dy, row) in head.chunks_mut(width).enumerate() {
                    fill(y0 + dy, row);
                }
            });
            y0 += height;
        }
    });
}


fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
