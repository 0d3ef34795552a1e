//! Constant-speed kinematic vehicle. No dynamics: commands integrate
//! directly into heading angles, and the vehicle advances along the updated
//! heading each step.

use serde::{Deserialize, Serialize};

use super::episode::EpisodeConfig;
use super::scene::Vec3;
use crate::controller::SteerCommand;

/// World frame: x forward at zero yaw, y left, z up. Positive yaw turns
/// right (toward -y), positive pitch tilts up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub position: Vec3,
    pub heading_yaw: f64,
    pub heading_pitch: f64,
    pub speed_mps: f64,
}

impl VehicleState {
    pub fn level(position: Vec3, heading_yaw: f64, speed_mps: f64) -> Self {
        Self { position, heading_yaw, heading_pitch: 0.0, speed_mps }
    }

    /// Unit forward vector of the heading.
    pub fn forward(&self) -> Vec3 {
        let (cp, sp) = (self.heading_pitch.cos(), self.heading_pitch.sin());
        let (cy, sy) = (self.heading_yaw.cos(), self.heading_yaw.sin());
        [cp * cy, -cp * sy, sp]
    }

    /// Unit camera-right vector (horizontal, independent of pitch).
    pub fn right(&self) -> Vec3 {
        let (cy, sy) = (self.heading_yaw.cos(), self.heading_yaw.sin());
        [-sy, -cy, 0.0]
    }
}

/// Integrates one control step: turn rates scale with the command, pitch is
/// clamped to +-60 degrees, then the vehicle advances `speed * dt` along the
/// updated heading.
pub fn step_vehicle(state: &VehicleState, cmd: &SteerCommand, cfg: &EpisodeConfig) -> VehicleState {
    let mut next = *state;
    next.heading_yaw += cmd.yaw * cfg.yaw_rate_gain * cfg.dt;
    next.heading_pitch = (next.heading_pitch + cmd.pitch * cfg.pitch_rate_gain * cfg.dt)
        .clamp(-std::f64::consts::FRAC_PI_3, std::f64::consts::FRAC_PI_3);
    let f = next.forward();
    let step = state.speed_mps * cfg.dt;
    for i in 0..3 {
        next.position[i] += step * f[i];
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::CameraRig;
    use approx::assert_relative_eq;

    fn cfg() -> EpisodeConfig {
        EpisodeConfig::new(CameraRig::centered(0.12, 450.0, 64, 48).unwrap())
    }

    #[test]
    fn zero_command_advances_straight() {
        let s = VehicleState::level([1.0, 2.0, 1.5], 0.0, 2.0);
        let next = step_vehicle(&s, &SteerCommand::ZERO, &cfg());
        assert_relative_eq!(next.position[0], 1.0 + 2.0 * cfg().dt);
        assert_relative_eq!(next.position[1], 2.0);
        assert_relative_eq!(next.position[2], 1.5);
        assert_eq!(next.heading_yaw, 0.0);
    }

    #[test]
    fn yaw_command_integrates_at_the_gain() {
        let mut c = cfg();
        c.yaw_rate_gain = 0.5;
        c.dt = 0.1;
        let s = VehicleState::level([0.0; 3], 0.0, 1.0);
        let next = step_vehicle(&s, &SteerCommand { pitch: 0.0, yaw: 1.0 }, &c);
        assert_relative_eq!(next.heading_yaw, 0.05);
        // Positive yaw turns right, i.e. toward -y.
        assert!(next.position[1] < 0.0);
    }

    #[test]
    fn opposite_commands_cancel() {
        let c = cfg();
        let s = VehicleState::level([0.0; 3], 0.3, 1.0);
        let fwd = SteerCommand { pitch: 0.2, yaw: -0.7 };
        let back = SteerCommand { pitch: -0.2, yaw: 0.7 };
        let after = step_vehicle(&step_vehicle(&s, &fwd, &c), &back, &c);
        assert_relative_eq!(after.heading_yaw, 0.3, epsilon = 1e-12);
        assert_relative_eq!(after.heading_pitch, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn pitch_clamps_at_sixty_degrees() {
        let mut c = cfg();
        c.pitch_rate_gain = 100.0;
        let s = VehicleState::level([0.0; 3], 0.0, 1.0);
        let next = step_vehicle(&s, &SteerCommand { pitch: 1.0, yaw: 0.0 }, &c);
        assert_relative_eq!(next.heading_pitch, std::f64::consts::FRAC_PI_3);
    }

    #[test]
    fn frame_vectors_are_orthonormal() {
        let s = VehicleState {
            position: [0.0; 3],
            heading_yaw: 0.7,
            heading_pitch: -0.3,
            speed_mps: 1.0,
        };
        let f = s.forward();
        let r = s.right();
        let dot = f[0] * r[0] + f[1] * r[1] + f[2] * r[2];
        assert_relative_eq!(dot, 0.0, epsilon = 1e-15);
        assert_relative_eq!(f.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(r.iter().map(|v| v * v).sum::<f64>(), 1.0, epsilon = 1e-15);
    }
}
