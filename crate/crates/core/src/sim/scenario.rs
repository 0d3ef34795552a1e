//! The built-in scenario pack: an empty corridor, a narrow doorway offset to
//! the left, and a lateral intruder that stays out of the avoidance rules'
//! reach until it is already close.

use super::episode::EpisodeConfig;
use super::scene::{Aabb, Scene, SceneBox};
use super::vehicle::VehicleState;
use crate::camera::CameraRig;

pub const SCENARIO_NAMES: [&str; 3] = ["corridor", "doorway", "intruder"];

fn default_rig() -> CameraRig {
    CameraRig::centered(0.12, 450.0, 640, 360).unwrap()
}

fn floor(x0: f64, x1: f64, seed: u64) -> SceneBox {
    SceneBox { min: [x0, -3.0, -0.3], max: [x1, 3.0, 0.0], seed }
}

fn side_walls(x0: f64, x1: f64) -> [SceneBox; 2] {
    [
        SceneBox { min: [x0, 2.5, -0.3], max: [x1, 2.8, 3.5], seed: 11 },
        SceneBox { min: [x0, -2.8, -0.3], max: [x1, -2.5, 3.5], seed: 12 },
    ]
}

/// Indoor scenes are enclosed: a far end wall keeps rays from grazing the
/// floor out to the horizon, where any texture aliases below pixel size.
fn end_wall(x: f64) -> SceneBox {
    SceneBox { min: [x, -3.0, -0.3], max: [x + 0.5, 3.0, 4.0], seed: 13 }
}

/// Straight corridor with nothing ahead: the controller should hold a dead
/// straight line.
pub fn corridor() -> (Scene, VehicleState, EpisodeConfig) {
    let [left_wall, right_wall] = side_walls(-1.0, 30.0);
    let scene = Scene {
        boxes: vec![floor(-1.0, 30.0, 10), left_wall, right_wall, end_wall(29.5)],
        bounds: Aabb::new([-1.0, -4.0, -1.0], [31.0, 4.0, 6.0]),
    };
    let start = VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8);
    let mut cfg = EpisodeConfig::new(default_rig());
    cfg.max_steps = 200;
    cfg.seed = 7;
    (scene, start, cfg)
}

/// A wall across the corridor with a full-height slot offset to the left of
/// the flight line. The open side reads as far in the left region once the
/// wall is close, so the controller should yaw left and slip through.
pub fn doorway() -> (Scene, VehicleState, EpisodeConfig) {
    let [left_wall, right_wall] = side_walls(-1.0, 30.0);
    let scene = Scene {
        boxes: vec![
            floor(-1.0, 30.0, 10),
            left_wall,
            right_wall,
            end_wall(29.5),
            // Wall pieces leaving a slot over y in (0.0, 1.5).
            SceneBox { min: [6.0, -2.5, -0.3], max: [6.3, 0.0, 3.5], seed: 21 },
            SceneBox { min: [6.0, 1.5, -0.3], max: [6.3, 2.5, 3.5], seed: 22 },
        ],
        bounds: Aabb::new([-1.0, -4.0, -1.0], [31.0, 4.0, 6.0]),
    };
    let start = VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8);
    let mut cfg = EpisodeConfig::new(default_rig());
    cfg.max_steps = 300;
    cfg.seed = 8;
    (scene, start, cfg)
}

/// An obstacle hanging mostly in the right region with a lip just across the
/// flight line. It reads far until the vehicle is nearly on top of it; by
/// the time the center region goes near, the late hard command cannot open
/// enough clearance.
pub fn lateral_intruder() -> (Scene, VehicleState, EpisodeConfig) {
    let scene = Scene {
        boxes: vec![
            floor(-1.0, 30.0, 10),
            end_wall(29.5),
            SceneBox { min: [8.0, -1.2, 0.6], max: [8.6, 0.25, 2.4], seed: 31 },
        ],
        bounds: Aabb::new([-1.0, -4.0, -1.0], [31.0, 4.0, 6.0]),
    };
    let start = VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8);
    let mut cfg = EpisodeConfig::new(default_rig());
    cfg.max_steps = 150;
    cfg.seed = 9;
    (scene, start, cfg)
}

pub fn scenario_by_name(name: &str) -> Option<(Scene, VehicleState, EpisodeConfig)> {
    match name {
        "corridor" => Some(corridor()),
        "doorway" => Some(doorway()),
        "intruder" => Some(lateral_intruder()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_are_well_formed() {
        for name in SCENARIO_NAMES {
            let (scene, start, cfg) = scenario_by_name(name).unwrap();
            scene.validate().unwrap();
            cfg.validate().unwrap();
            assert!(scene.bounds.contains(start.position), "{name}: start outside bounds");
            assert!(
                !crate::sim::check_collision(&scene, &start, cfg.collision_radius_m),
                "{name}: start collides"
            );
        }
        assert!(scenario_by_name("nope").is_none());
    }
}
