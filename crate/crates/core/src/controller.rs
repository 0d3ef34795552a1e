//! The steering brain: nine region depths in, a pitch/yaw command out.
//!
//! Depths are normalized by a span (default 3.0 m, so 0.75 m sits at the
//! near plateau edge and 2.25 m at the far plateau edge) and fed to a
//! five-input Mamdani controller over {center, up, down, left, right}. When
//! the cardinal directions are all blocked and the primary command is
//! negligible, a second controller — the same rule schema relabeled onto the
//! four corners, i.e. rotated 45 degrees — is consulted and its outputs are
//! rotated back into the image frame.
//!
//! Two presets ship. `paper_literal` keeps rules 6 and 7 exactly as printed
//! even though they steer toward a near region; `paper_corrected` flips
//! their antecedents to the behavior-consistent sides and is the default.
//! Both include the tie-break rules that pick the right/upper path when both
//! side regions are equally open, so a dead-centered obstacle still produces
//! a decisive command instead of a near-zero center of mass.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::fuzzy::{
    defuzz_centroid, defuzz_mean_of_max, infer, rule_strengths, Aggregation, Defuzz, FuzzyError,
    FuzzyRule, LinguisticVariable, MembershipFunction, RuleBase, SNorm, TNorm,
};
use crate::regions::RegionDepths;

#[derive(Debug, Error)]
pub enum ControllerError {
    #[error("depth must be positive, got {0}")]
    InvalidDepth(f64),
    #[error("unknown rule preset {0:?} (expected paper-literal or paper-corrected)")]
    UnknownPreset(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
}

/// Unitless steering command; positive pitch is upward, positive yaw is
/// rightward. Both components stay in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteerCommand {
    pub pitch: f64,
    pub yaw: f64,
}

impl SteerCommand {
    pub const ZERO: SteerCommand = SteerCommand { pitch: 0.0, yaw: 0.0 };

    pub fn magnitude(&self) -> f64 {
        (self.pitch * self.pitch + self.yaw * self.yaw).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RulePreset {
    PaperLiteral,
    PaperCorrected,
}

impl RulePreset {
    pub fn name(self) -> &'static str {
        match self {
            RulePreset::PaperLiteral => "paper-literal",
            RulePreset::PaperCorrected => "paper-corrected",
        }
    }
}

impl FromStr for RulePreset {
    type Err = ControllerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper-literal" | "paper_literal" => Ok(RulePreset::PaperLiteral),
            "paper-corrected" | "paper_corrected" => Ok(RulePreset::PaperCorrected),
            other => Err(ControllerError::UnknownPreset(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerConfig {
    /// Depths normalize as `clamp(d / span, 0, 1)`.
    pub normalization_span_m: f64,
    pub preset: RulePreset,
    /// Primary-command magnitude below which the corner controller is
    /// consulted.
    pub diagonal_trigger: f64,
    /// Minimum near-degree all four cardinal regions must reach before the
    /// corner controller is consulted.
    pub diagonal_near_gate: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            normalization_span_m: 3.0,
            preset: RulePreset::PaperCorrected,
            diagonal_trigger: 0.05,
            diagonal_near_gate: 0.5,
        }
    }
}

/// `clamp(d_m / span_m, 0, 1)`.
pub fn normalize_depth(d_m: f64, span_m: f64) -> Result<f64, ControllerError> {
    if !(d_m > 0.0) {
        return Err(ControllerError::InvalidDepth(d_m));
    }
    Ok((d_m / span_m).clamp(0.0, 1.0))
}

fn near_mf() -> MembershipFunction {
    MembershipFunction::new(0.0, 0.0, 0.25, 0.5).unwrap()
}

fn far_mf() -> MembershipFunction {
    MembershipFunction::new(0.5, 0.75, 1.0, 1.0).unwrap()
}

fn input_variable(name: &str) -> LinguisticVariable {
    LinguisticVariable::new(
        name,
        (0.0, 1.0),
        vec![
            ("near".into(), near_mf()),
            ("medium".into(), MembershipFunction::new(0.25, 0.5, 0.5, 0.75).unwrap()),
            ("far".into(), far_mf()),
        ],
    )
    .unwrap()
}

fn output_variable(name: &str) -> LinguisticVariable {
    LinguisticVariable::new(
        name,
        (-1.0, 1.0),
        vec![
            ("negative".into(), MembershipFunction::new(-1.0, -1.0, -0.5, 0.0).unwrap()),
            ("zero".into(), MembershipFunction::new(-0.5, 0.0, 0.0, 0.5).unwrap()),
            ("positive".into(), MembershipFunction::new(0.0, 0.5, 1.0, 1.0).unwrap()),
        ],
    )
    .unwrap()
}

fn rule(antecedent: &[(&str, &str)], consequents: &[(&str, &str)]) -> FuzzyRule {
    FuzzyRule {
        antecedent: antecedent.iter().map(|&(v, t)| (v.into(), t.into())).collect(),
        consequents: consequents.iter().map(|&(v, t)| (v.into(), t.into())).collect(),
    }
}

/// Rule set shared by the primary and (after relabeling) corner controllers.
/// `up`/`down`/`left`/`right` name whichever four regions surround the
/// center in the controller's frame.
fn steering_rules(preset: RulePreset, up: &str, down: &str, left: &str, right: &str) -> Vec<FuzzyRule> {
    // Antecedent clause order is (center, near side, opposite side) so that
    // mirrored rule pairs fold their strengths in the same order.
    let mut rules = vec![
        // 1: open center wins regardless of the rest.
        rule(&[("center", "far")], &[("pitch", "zero"), ("yaw", "zero")]),
        // 2: blocked above, open below -> descend.
        rule(
            &[("center", "near"), (up, "near"), (down, "far")],
            &[("pitch", "negative")],
        ),
        // 3: blocked below, open above -> climb.
        rule(
            &[("center", "near"), (down, "near"), (up, "far")],
            &[("pitch", "positive")],
        ),
        // 4: blocked right, open left -> go left.
        rule(
            &[("center", "near"), (right, "near"), (left, "far")],
            &[("yaw", "negative")],
        ),
        // 5: blocked left, open right -> go right.
        rule(
            &[("center", "near"), (left, "near"), (right, "far")],
            &[("yaw", "positive")],
        ),
    ];
    match preset {
        RulePreset::PaperLiteral => {
            // 6 and 7 as printed: steer toward the near side.
            rules.push(rule(&[("center", "near"), (right, "near")], &[("yaw", "positive")]));
            rules.push(rule(&[("center", "near"), (up, "near")], &[("pitch", "positive")]));
        }
        RulePreset::PaperCorrected => {
            // 6 and 7 with the antecedent flipped to the consistent side.
            rules.push(rule(&[("center", "near"), (left, "near")], &[("yaw", "positive")]));
            rules.push(rule(&[("center", "near"), (down, "near")], &[("pitch", "positive")]));
        }
    }
    // Tie-breaks: both side paths open but the center blocked would leave
    // the center of mass near zero, so commit to the right/upper path.
    rules.push(rule(
        &[("center", "near"), (left, "far"), (right, "far")],
        &[("yaw", "positive")],
    ));
    rules.push(rule(
        &[("center", "near"), (up, "far"), (down, "far")],
        &[("pitch", "positive")],
    ));
    rules
}

fn build_rulebase(preset: RulePreset, up: &str, down: &str, left: &str, right: &str) -> RuleBase {
    let variables = vec![
        input_variable("center"),
        input_variable(up),
        input_variable(down),
        input_variable(left),
        input_variable(right),
        output_variable("pitch"),
        output_variable("yaw"),
    ];
    RuleBase::new(
        variables,
        steering_rules(preset, up, down, left, right),
        TNorm::Min,
        SNorm::Max,
        Aggregation::Max,
        Defuzz::Centroid,
        1001,
    )
    .expect("preset rule base is well-formed")
}

/// Five-region controller over {center, up, down, left, right}.
pub fn build_primary_rulebase(preset: RulePreset) -> RuleBase {
    build_rulebase(preset, "up", "down", "left", "right")
}

/// Corner controller: the primary schema relabeled counter-clockwise by 45
/// degrees (up -> up_left, right -> up_right, down -> down_right,
/// left -> down_left). Its pitch/yaw live in the rotated frame.
pub fn build_diagonal_rulebase(preset: RulePreset) -> RuleBase {
    build_rulebase(preset, "up_left", "down_right", "down_left", "up_right")
}

/// Maps a rotated-frame command back into the image frame. A pure rotation
/// (norm-preserving) before the final clamp to [-1, 1].
pub fn rotate_back(pitch_r: f64, yaw_r: f64) -> (f64, f64) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pitch = (pitch_r + yaw_r) * h;
    let yaw = (yaw_r - pitch_r) * h;
    (pitch.clamp(-1.0, 1.0), yaw.clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveController {
    Primary,
    Diagonal,
}

/// A steering decision plus diagnostics for logging and the CLI.
#[derive(Debug, Clone, Serialize)]
pub struct SteerOutcome {
    pub command: SteerCommand,
    pub active: ActiveController,
    /// Strengths of the active controller's rules, in rule order.
    pub rule_strengths: Vec<f64>,
}

/// Immutable steering controller; `steer` is pure and thread-safe.
#[derive(Debug, Clone)]
pub struct Controller {
    primary: RuleBase,
    diagonal: Option<RuleBase>,
    cfg: ControllerConfig,
}

impl Controller {
    pub fn new(cfg: ControllerConfig) -> Self {
        Self {
            primary: build_primary_rulebase(cfg.preset),
            diagonal: Some(build_diagonal_rulebase(cfg.preset)),
            cfg,
        }
    }

    /// Controller around a user-supplied rule base. The corner controller is
    /// disabled: a custom base has no defined 45-degree relabeling.
    pub fn with_custom_rulebase(primary: RuleBase, cfg: ControllerConfig) -> Self {
        Self { primary, diagonal: None, cfg }
    }

    pub fn primary_rulebase(&self) -> &RuleBase {
        &self.primary
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.cfg
    }

    pub fn steer(&self, depths: &RegionDepths) -> SteerOutcome {
        let span = self.cfg.normalization_span_m;
        let n = |d: f32| -> f64 {
            assert!(d > 0.0, "region depths must be positive, got {d}");
            (d as f64 / span).clamp(0.0, 1.0)
        };

        let center = n(depths.center);
        let up = n(depths.up);
        let down = n(depths.down);
        let left = n(depths.left);
        let right = n(depths.right);

        let primary_inputs = BTreeMap::from([
            ("center".to_string(), center),
            ("up".to_string(), up),
            ("down".to_string(), down),
            ("left".to_string(), left),
            ("right".to_string(), right),
        ]);
        let (pitch, yaw) = self.run(&self.primary, &primary_inputs);
        let command = SteerCommand {
            pitch: pitch.clamp(-1.0, 1.0),
            yaw: yaw.clamp(-1.0, 1.0),
        };

        if let Some(diagonal) = &self.diagonal {
            if self.should_consult_diagonal(&command, center, [up, down, left, right]) {
                let diagonal_inputs = BTreeMap::from([
                    ("center".to_string(), center),
                    ("up_left".to_string(), n(depths.up_left)),
                    ("up_right".to_string(), n(depths.up_right)),
                    ("down_left".to_string(), n(depths.down_left)),
                    ("down_right".to_string(), n(depths.down_right)),
                ]);
                let (pitch_r, yaw_r) = self.run(diagonal, &diagonal_inputs);
                let (pitch, yaw) = rotate_back(pitch_r, yaw_r);
                return SteerOutcome {
                    command: SteerCommand { pitch, yaw },
                    active: ActiveController::Diagonal,
                    rule_strengths: rule_strengths(diagonal, &diagonal_inputs)
                        .expect("diagonal inputs cover the rule base"),
                };
            }
        }

        SteerOutcome {
            command,
            active: ActiveController::Primary,
            rule_strengths: rule_strengths(&self.primary, &primary_inputs)
                .expect("primary inputs cover the rule base"),
        }
    }

    /// Corners matter only when the center is not clearly open, the primary
    /// command has nothing to say, and every cardinal escape is blocked.
    fn should_consult_diagonal(&self, command: &SteerCommand, center: f64, cardinals: [f64; 4]) -> bool {
        let (near, far) = match (
            self.primary.variable("center").and_then(|v| v.term("near")).copied(),
            self.primary.variable("center").and_then(|v| v.term("far")).copied(),
        ) {
            (Some(n), Some(f)) => (n, f),
            _ => return false,
        };
        far.eval(center) < 1.0
            && command.magnitude() < self.cfg.diagonal_trigger
            && cardinals.iter().all(|&c| near.eval(c) >= self.cfg.diagonal_near_gate)
    }

    /// Defuzzifies both outputs; an all-zero distribution downgrades to a
    /// zero component.
    fn run(&self, rb: &RuleBase, inputs: &BTreeMap<String, f64>) -> (f64, f64) {
        let dists = infer(rb, inputs).expect("inputs cover the rule base");
        let crisp = |name: &str| -> f64 {
            let Some(dist) = dists.get(name) else {
                return 0.0;
            };
            let value = match rb.defuzz {
                Defuzz::Centroid => defuzz_centroid(dist),
                Defuzz::MeanOfMax => defuzz_mean_of_max(dist),
            };
            match value {
                Ok(v) => v,
                Err(FuzzyError::NoActivation(_)) => {
                    log::debug!("no rule activated {name}; holding it at zero");
                    0.0
                }
                Err(e) => panic!("defuzzification failed: {e}"),
            }
        };
        (crisp("pitch"), crisp("yaw"))
    }
}

/// One-shot steering with a throwaway controller. Prefer [`Controller`] when
/// issuing many commands.
pub fn steer(depths: &RegionDepths, cfg: &ControllerConfig) -> SteerCommand {
    Controller::new(*cfg).steer(depths).command
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn depths(center: f32, up: f32, down: f32, left: f32, right: f32) -> RegionDepths {
        RegionDepths {
            center,
            up,
            down,
            left,
            right,
            up_left: 3.0,
            up_right: 3.0,
            down_left: 3.0,
            down_right: 3.0,
        }
    }

    #[test]
    fn normalize_depth_anchors() {
        assert_relative_eq!(normalize_depth(0.75, 3.0).unwrap(), 0.25);
        assert_relative_eq!(normalize_depth(2.25, 3.0).unwrap(), 0.75);
        assert_relative_eq!(normalize_depth(9.0, 3.0).unwrap(), 1.0);
        assert!(normalize_depth(0.0, 3.0).is_err());
    }

    #[test]
    fn presets_have_nine_valid_rules() {
        for preset in [RulePreset::PaperLiteral, RulePreset::PaperCorrected] {
            let primary = build_primary_rulebase(preset);
            let diagonal = build_diagonal_rulebase(preset);
            assert_eq!(primary.rules().len(), 9);
            assert_eq!(diagonal.rules().len(), primary.rules().len());
            primary.validate().unwrap();
            diagonal.validate().unwrap();
        }
    }

    #[test]
    fn corrected_rule_6_flips_the_antecedent_side() {
        let rb = build_primary_rulebase(RulePreset::PaperCorrected);
        let rule6 = &rb.rules()[5];
        assert_eq!(
            rule6.antecedent,
            vec![("center".to_string(), "near".to_string()), ("left".to_string(), "near".to_string())]
        );
        assert_eq!(rule6.consequents, vec![("yaw".to_string(), "positive".to_string())]);

        let literal = build_primary_rulebase(RulePreset::PaperLiteral);
        assert_eq!(
            literal.rules()[5].antecedent[1],
            ("right".to_string(), "near".to_string())
        );
    }

    #[test]
    fn diagonal_relabels_rule_2() {
        let rb = build_diagonal_rulebase(RulePreset::PaperCorrected);
        let rule2 = &rb.rules()[1];
        assert_eq!(
            rule2.antecedent,
            vec![
                ("center".to_string(), "near".to_string()),
                ("up_left".to_string(), "near".to_string()),
                ("down_right".to_string(), "far".to_string()),
            ]
        );
        assert_eq!(rule2.consequents, vec![("pitch".to_string(), "negative".to_string())]);
    }

    #[test]
    fn rotate_back_examples() {
        assert_eq!(rotate_back(0.0, 0.0), (0.0, 0.0));
        let (p, y) = rotate_back(0.0, 1.0);
        assert_relative_eq!(p, std::f64::consts::FRAC_1_SQRT_2);
        assert_relative_eq!(y, std::f64::consts::FRAC_1_SQRT_2);
        // Norm-preserving inside the unit box.
        let (p, y) = rotate_back(0.3, -0.4);
        assert_relative_eq!((p * p + y * y).sqrt(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn open_center_means_zero_command() {
        let controller = Controller::new(ControllerConfig::default());
        let outcome = controller.steer(&RegionDepths::uniform(3.0));
        assert!(outcome.command.magnitude() < 1e-9, "{:?}", outcome.command);
        assert_eq!(outcome.active, ActiveController::Primary);
    }

    #[test]
    fn floor_obstacle_pitches_up() {
        let controller = Controller::new(ControllerConfig::default());
        let outcome = controller.steer(&depths(0.5, 3.0, 0.5, 1.5, 1.5));
        assert!(outcome.command.pitch > 0.0, "pitch = {}", outcome.command.pitch);
        assert!(outcome.command.yaw.abs() < 0.05, "yaw = {}", outcome.command.yaw);
    }

    #[test]
    fn blocked_cross_section_breaks_the_tie_to_the_right() {
        for preset in [RulePreset::PaperLiteral, RulePreset::PaperCorrected] {
            let controller = Controller::new(ControllerConfig { preset, ..Default::default() });
            let outcome = controller.steer(&depths(0.5, 0.5, 0.5, 3.0, 3.0));
            assert!(outcome.command.yaw > 0.0, "{preset:?}: yaw = {}", outcome.command.yaw);
        }
    }

    #[test]
    fn rule_one_dominates_when_center_is_far() {
        let controller = Controller::new(ControllerConfig::default());
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..50 {
            let d = depths(
                rng.gen_range(2.25..9.0),
                rng.gen_range(0.1..9.0),
                rng.gen_range(0.1..9.0),
                rng.gen_range(0.1..9.0),
                rng.gen_range(0.1..9.0),
            );
            let cmd = controller.steer(&d).command;
            assert!(cmd.pitch.abs() < 1e-9 && cmd.yaw.abs() < 1e-9, "{cmd:?} for {d:?}");
        }
    }

    #[test]
    fn mirror_symmetry_in_the_directional_regime() {
        // One side decisively near, the other on the far plateau: the regime
        // the printed directional rules govern. The tie-break rules are
        // deliberately asymmetric, so double-open and double-blocked inputs
        // are excluded by construction.
        let controller = Controller::new(ControllerConfig::default());
        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..100 {
            let center = rng.gen_range(0.3..3.0);
            let near_lr = rng.gen_range(0.1..1.5);
            let far_lr = rng.gen_range(2.25..3.0);
            let (left, right) = if rng.gen() { (near_lr, far_lr) } else { (far_lr, near_lr) };
            let near_ud = rng.gen_range(0.1..1.5);
            let far_ud = rng.gen_range(2.25..3.0);
            let (up, down) = if rng.gen() { (near_ud, far_ud) } else { (far_ud, near_ud) };

            let base = controller.steer(&depths(center, up, down, left, right)).command;
            let lr = controller.steer(&depths(center, up, down, right, left)).command;
            assert_relative_eq!(lr.yaw, -base.yaw, epsilon = 1e-9);
            assert_relative_eq!(lr.pitch, base.pitch, epsilon = 1e-9);

            let ud = controller.steer(&depths(center, down, up, left, right)).command;
            assert_relative_eq!(ud.pitch, -base.pitch, epsilon = 1e-9);
            assert_relative_eq!(ud.yaw, base.yaw, epsilon = 1e-9);
        }
    }

    #[test]
    fn diagonal_consulted_only_in_the_dead_band() {
        let controller = Controller::new(ControllerConfig::default());
        // Center in the neutral band, all cardinals hard near, corners open:
        // the primary controller has nothing to say.
        let d = RegionDepths {
            center: 1.8,
            up: 0.5,
            down: 0.5,
            left: 0.5,
            right: 0.5,
            up_left: 3.0,
            up_right: 3.0,
            down_left: 3.0,
            down_right: 3.0,
        };
        let outcome = controller.steer(&d);
        assert_eq!(outcome.active, ActiveController::Diagonal);

        // A decisive primary command suppresses the corner controller.
        let outcome = controller.steer(&depths(0.5, 0.5, 3.0, 1.5, 1.5));
        assert_eq!(outcome.active, ActiveController::Primary);
    }

    #[test]
    fn symmetric_corners_yield_zero_rotated_outputs() {
        for value in [0.4f32, 1.0, 1.6, 2.5, 3.0] {
            let rb = build_diagonal_rulebase(RulePreset::PaperCorrected);
            let n = (value as f64 / 3.0).clamp(0.0, 1.0);
            let inputs = BTreeMap::from([
                ("center".to_string(), 0.6),
                ("up_left".to_string(), n),
                ("up_right".to_string(), n),
                ("down_left".to_string(), n),
                ("down_right".to_string(), n),
            ]);
            let dists = infer(&rb, &inputs).unwrap();
            for name in ["pitch", "yaw"] {
                match defuzz_centroid(&dists[name]) {
                    Ok(v) => assert_relative_eq!(v, 0.0, epsilon = 1e-9),
                    Err(FuzzyError::NoActivation(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn output_bounds_hold_everywhere() {
        let controller = Controller::new(ControllerConfig::default());
        let mut rng = StdRng::seed_from_u64(2024);
        for _ in 0..200 {
            let d = RegionDepths {
                center: rng.gen_range(0.05..9.0),
                up: rng.gen_range(0.05..9.0),
                down: rng.gen_range(0.05..9.0),
                left: rng.gen_range(0.05..9.0),
                right: rng.gen_range(0.05..9.0),
                up_left: rng.gen_range(0.05..9.0),
                up_right: rng.gen_range(0.05..9.0),
                down_left: rng.gen_range(0.05..9.0),
                down_right: rng.gen_range(0.05..9.0),
            };
            let cmd = controller.steer(&d).command;
            assert!(cmd.pitch.abs() <= 1.0 && cmd.yaw.abs() <= 1.0);
        }
    }

    #[test]
    fn preset_parsing() {
        assert_eq!("paper-literal".parse::<RulePreset>().unwrap(), RulePreset::PaperLiteral);
        assert_eq!("paper_corrected".parse::<RulePreset>().unwrap(), RulePreset::PaperCorrected);
        assert!("mamdani".parse::<RulePreset>().is_err());
    }
}
