//! Synthetic stereo world for closed-loop validation.
//!
//! Scenes are textured axis-aligned boxes rendered through an ideally
//! rectified pinhole stereo pair, so the epipolar constraint holds by
//! construction and ground-truth depth is available for free. A
//! constant-speed kinematic vehicle closes the loop:
//! render -> match -> distill -> steer -> step.

mod episode;
mod render;
mod scene;
mod scenario;
mod vehicle;

pub use episode::{run_episode, EpisodeConfig, TrajectoryLog, TrajectoryStep};
pub use render::{ground_truth_depth, render_stereo, CameraPose};
pub use scene::{check_collision, Aabb, Scene, SceneBox};
pub use scenario::{corridor, doorway, lateral_intruder, scenario_by_name, SCENARIO_NAMES};
pub use vehicle::{step_vehicle, VehicleState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("scene json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid episode config: {0}")]
    InvalidConfig(String),
}
