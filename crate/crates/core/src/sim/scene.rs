//! Axis-aligned box scenes with slab ray intersection and sphere collision.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::sim::vehicle::VehicleState;

pub type Vec3 = [f64; 3];

/// Axis-aligned box between two corners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    pub fn has_positive_extent(&self) -> bool {
        (0..3).all(|i| self.max[i] > self.min[i])
    }

    /// Squared distance from a point to the box (zero inside).
    pub fn distance_sq(&self, p: Vec3) -> f64 {
        let mut sq = 0.0;
        for i in 0..3 {
            let d = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            sq += d * d;
        }
        sq
    }

    /// Slab intersection. Returns the entry parameter and the axis of the
    /// face crossed, for rays with any non-normalized direction. Origins
    /// inside the box report an immediate hit.
    pub fn ray_entry(&self, origin: Vec3, dir: Vec3) -> Option<(f64, usize)> {
        let mut t_min = 1e-9;
        let mut t_max = f64::INFINITY;
        let mut axis = 0;
        for i in 0..3 {
            if dir[i].abs() < 1e-300 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (t0, t1) = {
                let a = (self.min[i] - origin[i]) * inv;
                let b = (self.max[i] - origin[i]) * inv;
                if a < b {
                    (a, b)
                } else {
                    (b, a)
                }
            };
            if t0 > t_min {
                t_min = t0;
                axis = i;
            }
            t_max = t_max.min(t1);
            if t_min > t_max {
                return None;
            }
        }
        Some((t_min, axis))
    }
}

/// A textured obstacle; `seed` drives the deterministic surface pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneBox {
    pub min: Vec3,
    pub max: Vec3,
    pub seed: u64,
}

impl SceneBox {
    pub fn aabb(&self) -> Aabb {
        Aabb::new(self.min, self.max)
    }
}

/// World description: obstacles plus the bounds an episode must stay in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub boxes: Vec<SceneBox>,
    pub bounds: Aabb,
}

impl Scene {
    pub fn validate(&self) -> Result<(), SimError> {
        for (i, b) in self.boxes.iter().enumerate() {
            if !b.aabb().has_positive_extent() {
                return Err(SimError::InvalidScene(format!(
                    "box {i} has non-positive extent: {:?} .. {:?}",
                    b.min, b.max
                )));
            }
        }
        if !self.bounds.has_positive_extent() {
            return Err(SimError::InvalidScene("bounds have non-positive extent".into()));
        }
        Ok(())
    }

    pub fn from_json_str(s: &str) -> Result<Self, SimError> {
        let scene: Scene = serde_json::from_str(s)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Self::from_json_str(&fs::read_to_string(path)?)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), SimError> {
        fs::write(path, self.to_json_string())?;
        Ok(())
    }

    /// Nearest box hit along a ray: `(t, box index, face axis)`.
    pub fn raycast(&self, origin: Vec3, dir: Vec3) -> Option<(f64, usize, usize)> {
        let mut best: Option<(f64, usize, usize)> = None;
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some((t, axis)) = b.aabb().ray_entry(origin, dir) {
                if best.map_or(true, |(bt, _, _)| t < bt) {
                    best = Some((t, i, axis));
                }
            }
        }
        best
    }
}

/// True iff a sphere of `radius_m` around the vehicle touches any box.
/// The boundary counts: a sphere exactly tangent to a face collides.
pub fn check_collision(scene: &Scene, state: &VehicleState, radius_m: f64) -> bool {
    assert!(radius_m > 0.0, "collision radius must be positive");
    scene
        .boxes
        .iter()
        .any(|b| b.aabb().distance_sq(state.position) <= radius_m * radius_m)
}
