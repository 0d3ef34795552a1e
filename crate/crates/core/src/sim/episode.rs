//! Closed-loop episodes: render -> fused pipeline -> steer -> step, with a
//! replayable trajectory log.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::render::{mix4, render_stereo};
use super::scene::{check_collision, Scene};
use super::vehicle::{step_vehicle, VehicleState};
use super::SimError;
use crate::camera::CameraRig;
use crate::controller::{Controller, ControllerConfig, SteerCommand};
use crate::disparity::{fused_pipeline, MatchParams};
use crate::lut::DepthLut;
use crate::regions::{center_region_px, make_grid, RegionDepths, RegionGrid};

/// Everything an episode needs besides the scene and the start state.
#[derive(Debug, Clone)]
pub struct EpisodeConfig {
    pub rig: CameraRig,
    pub match_params: MatchParams,
    /// Center region side in px; `None` derives it from the rig as the
    /// projection of a 0.5 m window at 1.5 m.
    pub center_side_px: Option<u32>,
    pub lut: DepthLut,
    pub controller: ControllerConfig,
    pub dt: f64,
    /// Turn rate per unit yaw command, rad/s.
    pub yaw_rate_gain: f64,
    /// Climb rate per unit pitch command, rad/s.
    pub pitch_rate_gain: f64,
    pub max_steps: usize,
    pub collision_radius_m: f64,
    pub noise_stddev: f64,
    pub seed: u64,
    pub workers: usize,
}

impl EpisodeConfig {
    pub fn new(rig: CameraRig) -> Self {
        Self {
            rig,
            // Region minima are extreme statistics: one false near match
            // poisons a whole region. Episodes therefore run stricter
            // validity filtering than the bare matcher defaults: left-right
            // checking on and a higher uniqueness margin, which together
            // reject the aliased matches glancing surfaces produce.
            match_params: MatchParams {
                uniqueness_ratio: 0.25,
                lr_consistency_px: Some(1.0),
                ..MatchParams::default()
            },
            center_side_px: None,
            lut: DepthLut::identity(),
            controller: ControllerConfig::default(),
            dt: 0.1,
            yaw_rate_gain: 1.0,
            pitch_rate_gain: 0.4,
            max_steps: 200,
            collision_radius_m: 0.25,
            noise_stddev: 0.0,
            seed: 1,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.dt > 0.0) {
            return Err(SimError::InvalidConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        if self.yaw_rate_gain < 0.0 || self.pitch_rate_gain < 0.0 {
            return Err(SimError::InvalidConfig("rate gains must be >= 0".into()));
        }
        if !(self.collision_radius_m > 0.0) {
            return Err(SimError::InvalidConfig("collision radius must be > 0".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> RegionGrid {
        let side = self.center_side_px.unwrap_or_else(|| {
            center_region_px(self.rig.focal_px, 0.5, 1.5).expect("positive rig focal length")
        });
        make_grid(self.rig.width_px, self.rig.height_px, side).expect("center fits the image")
    }
}

/// One logged control step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep {
    pub t: f64,
    pub state: VehicleState,
    pub command: SteerCommand,
    pub depths: RegionDepths,
    pub collision: bool,
}

/// A full episode log; replaying the same scene, start, and config
/// reproduces it bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub seed: u64,
    pub steps: Vec<TrajectoryStep>,
}

const CSV_HEADER: &str = "t,x,y,z,yaw,pitch,cmd_pitch,cmd_yaw,center,up,down,left,right,up_left,up_right,down_left,down_right,collision";

impl TrajectoryLog {
    pub fn collided(&self) -> bool {
        self.steps.iter().any(|s| s.collision)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.steps {
            let p = s.state.position;
            let d = &s.depths;
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                s.t,
                p[0],
                p[1],
                p[2],
                s.state.heading_yaw,
                s.state.heading_pitch,
                s.command.pitch,
                s.command.yaw,
                d.center,
                d.up,
                d.down,
                d.left,
                d.right,
                d.up_left,
                d.up_right,
                d.down_left,
                d.down_right,
                u8::from(s.collision),
            )
            .unwrap();
        }
        out
    }

    /// Reads a log written by [`TrajectoryLog::to_csv_string`]. The seed is
    /// not part of the CSV; pass the one used for the episode.
    pub fn from_csv_str(s: &str, seed: u64) -> Result<Self, SimError> {
        let mut lines = s.lines();
        let header = lines
            .next()
            .ok_or_else(|| SimError::InvalidConfig("empty trajectory csv".into()))?;
        if header != CSV_HEADER {
            return Err(SimError::InvalidConfig(format!("bad trajectory header {header:?}")));
        }
        let mut steps = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 18 {
                return Err(SimError::InvalidConfig(format!(
                    "trajectory row {} has {} fields",
                    i + 2,
                    fields.len()
                )));
            }
            let num = |k: usize| -> Result<f64, SimError> {
                fields[k].parse().map_err(|_| {
                    SimError::InvalidConfig(format!("trajectory row {}: bad number {:?}", i + 2, fields[k]))
                })
            };
            let numf = |k: usize| -> Result<f32, SimError> { num(k).map(|v| v as f32) };
            steps.push(TrajectoryStep {
                t: num(0)?,
                state: VehicleState {
                    position: [num(1)?, num(2)?, num(3)?],
                    heading_yaw: num(4)?,
                    heading_pitch: num(5)?,
                    speed_mps: f64::NAN, // not serialized; constant per episode
                },
                command: SteerCommand { pitch: num(6)?, yaw: num(7)? },
                depths: RegionDepths {
                    center: numf(8)?,
                    up: numf(9)?,
                    down: numf(10)?,
                    left: numf(11)?,
                    right: numf(12)?,
                    up_left: numf(13)?,
                    up_right: numf(14)?,
                    down_left: numf(15)?,
                    down_right: numf(16)?,
                },
                collision: fields[17] == "1",
            });
        }
        Ok(Self { seed, steps })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), SimError> {
        fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

/// Runs the closed loop from `start` until collision, bounds exit, or
/// `max_steps`. Each step renders the current view, runs the fused depth
/// pipeline, steers, logs, then advances the vehicle. A collision is logged
/// on the step that detects it and terminates the episode.
pub fn run_episode(scene: &Scene, start: &VehicleState, cfg: &EpisodeConfig) -> TrajectoryLog {
    cfg.validate().expect("episode config");
    scene.validate().expect("scene");
    assert!(
        !check_collision(scene, start, cfg.collision_radius_m),
        "episode must start collision-free"
    );

    let grid = cfg.grid();
    let controller = Controller::new(cfg.controller);
    let mut state = *start;
    let mut steps = Vec::new();

    for step in 0..cfg.max_steps {
        let pair = render_stereo(scene, &state, &cfg.rig, cfg.noise_stddev, mix4(cfg.seed, step as u64, 0, 0));
        let (_, depths) = fused_pipeline(&pair, &cfg.match_params, &grid, &cfg.lut, cfg.workers);
        let command = controller.steer(&depths).command;
        let collision = check_collision(scene, &state, cfg.collision_radius_m);
        steps.push(TrajectoryStep {
            t: step as f64 * cfg.dt,
            state,
            command,
            depths,
            collision,
        });
        if collision {
            break;
        }
        state = step_vehicle(&state, &command, cfg);
        if !scene.bounds.contains(state.position) {
            break;
        }
    }
    TrajectoryLog { seed: cfg.seed, steps }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::scene::{Aabb, SceneBox};

    fn small_rig() -> CameraRig {
        CameraRig::centered(0.12, 120.0, 160, 120).unwrap()
    }

    fn open_scene() -> Scene {
        Scene {
            boxes: vec![
                SceneBox { min: [0.0, -4.0, -1.0], max: [12.0, 4.0, 0.0], seed: 3 },
                SceneBox { min: [11.0, -4.0, -1.0], max: [12.0, 4.0, 5.0], seed: 4 },
            ],
            bounds: Aabb::new([-1.0, -5.0, -2.0], [13.0, 5.0, 5.0]),
        }
    }

    fn fast_cfg() -> EpisodeConfig {
        let mut cfg = EpisodeConfig::new(small_rig());
        cfg.match_params.max_disparity_px = 16;
        cfg.center_side_px = Some(40);
        cfg.max_steps = 12;
        cfg.workers = 2;
        cfg
    }

    #[test]
    fn straight_flight_over_open_floor() {
        let log = run_episode(&open_scene(), &VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8), &fast_cfg());
        assert_eq!(log.steps.len(), 12);
        assert!(!log.collided());
        let last = log.steps.last().unwrap();
        // The floor is far below; nothing should steer the vehicle.
        assert!(last.command.magnitude() < 1e-9, "{:?}", last.command);
        assert!(last.state.position[1].abs() < 1e-9);
    }

    #[test]
    fn episodes_replay_identically() {
        let scene = open_scene();
        let start = VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8);
        let cfg = fast_cfg();
        let a = run_episode(&scene, &start, &cfg);
        let b = run_episode(&scene, &start, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn timestamps_step_by_dt() {
        let log = run_episode(&open_scene(), &VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8), &fast_cfg());
        for (i, s) in log.steps.iter().enumerate() {
            assert_eq!(s.t, i as f64 * 0.1);
        }
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let log = run_episode(&open_scene(), &VehicleState::level([0.5, 0.0, 1.5], 0.0, 0.8), &fast_cfg());
        let back = TrajectoryLog::from_csv_str(&log.to_csv_string(), log.seed).unwrap();
        assert_eq!(log.steps.len(), back.steps.len());
        for (a, b) in log.steps.iter().zip(&back.steps) {
            assert_eq!(a.t, b.t);
            assert_eq!(a.state.position, b.state.position);
            assert_eq!(a.command, b.command);
            assert_eq!(a.depths, b.depths);
            assert_eq!(a.collision, b.collision);
        }
    }
}
