use crate::arena::Command;
use crate::geometry::{Pose, Vec3};

use super::{wrap_angle, Waypoint};

/// Rectangle swept by the wrist sensor while scanning for heat.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanRect {
    pub width: f64,
    pub height: f64,
    pub period: f64,
}

impl Default for ScanRect {
    fn default() -> Self {
        Self {
            width: 0.6,
            height: 0.4,
            period: 12.0,
        }
    }
}

/// Piecewise-linear traversal of the rectangle perimeter at constant speed,
/// starting at the bottom-left corner; returns (lateral, vertical) offsets
/// from the rectangle center.
pub fn scan_motion(t: f64, rect: &ScanRect) -> (f64, f64) {
    assert!(rect.period > 0.0, "period must be > 0");
    let w = rect.width;
    let h = rect.height;
    let perimeter = 2.0 * (w + h);
    let s = (t.rem_euclid(rect.period)) / rect.period * perimeter;
    let (x, y) = if s < w {
        (s, 0.0)
    } else if s < w + h {
        (w, s - w)
    } else if s < 2.0 * w + h {
        (w - (s - w - h), h)
    } else {
        (0.0, h - (s - 2.0 * w - h))
    };
    (x - w / 2.0, y - h / 2.0)
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SprayConfig {
    pub amplitude_deg: f64,
    pub period: f64,
}

impl Default for SprayConfig {
    fn default() -> Self {
        Self {
            amplitude_deg: 6.0,
            period: 4.0,
        }
    }
}

/// Hourglass nozzle-tilt pattern: a 1:2 Lissajous figure crossing at the
/// center. Returns (pitch, yaw) offsets in radians.
pub fn spray_pattern(t: f64, amplitude: f64, period: f64) -> (f64, f64) {
    assert!(period > 0.0, "period must be > 0");
    let phase = std::f64::consts::TAU * t / period;
    let yaw = amplitude * phase.sin();
    let pitch = amplitude * (2.0 * phase).sin();
    (pitch, yaw)
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    /// Max nozzle height above the base the pump can feed.
    pub max_head: f64,
    pub reach: f64,
    pub min_z: f64,
    /// Nozzle translation speed (m/s) used by the simulator.
    pub speed: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            max_head: 1.5,
            reach: 1.6,
            min_z: 0.1,
            speed: 0.5,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AimError {
    #[error("no ballistic solution within the arm workspace")]
    Unreachable,
}

/// Nozzle pose whose level ballistic arc passes through `target` (both in
/// the base frame): keep the nozzle's horizontal position, face the target,
/// and raise the exit so the drop over the flight equals the height gap.
pub fn nozzle_solution(
    target: &Vec3,
    current_nozzle: &Pose,
    exit_speed: f64,
    gravity: f64,
    arm: &ArmConfig,
) -> Result<Pose, AimError> {
    if target.z > arm.max_head {
        return Err(AimError::Unreachable);
    }
    let d = Vec3::new(
        target.x - current_nozzle.translation.x,
        target.y - current_nozzle.translation.y,
        0.0,
    );
    let dist = d.norm();
    if dist < 0.05 {
        return Err(AimError::Unreachable);
    }
    let drop = 0.5 * gravity * (dist / exit_speed).powi(2);
    let z = target.z + drop;
    if z > arm.max_head || z < arm.min_z {
        return Err(AimError::Unreachable);
    }
    let position = Vec3::new(
        current_nozzle.translation.x,
        current_nozzle.translation.y,
        z,
    );
    if position.norm() > arm.reach + 1.0 {
        return Err(AimError::Unreachable);
    }
    let yaw = d.y.atan2(d.x);
    Ok(Pose::from_yaw(position, yaw))
}

/// One aiming increment: move the nozzle toward the ballistic solution for
/// the freshest estimate, at most `max_step` of translation per call.
pub fn aim_step(
    estimate: &Vec3,
    current_nozzle: &Pose,
    exit_speed: f64,
    gravity: f64,
    arm: &ArmConfig,
    max_step: f64,
) -> Result<Pose, AimError> {
    let solution = nozzle_solution(estimate, current_nozzle, exit_speed, gravity, arm)?;
    let delta = solution.translation - current_nozzle.translation;
    let dist = delta.norm();
    if dist <= max_step {
        return Ok(solution);
    }
    Ok(Pose {
        translation: current_nozzle.translation + delta * (max_step / dist),
        rotation: solution.rotation,
    })
}

#[derive(Debug, Clone)]
pub struct SlotConfig {
    /// Base pose in front of the suspected fire.
    pub approach: Pose,
    /// Scan-rectangle center: nozzle position relative to the base.
    pub scan_center: Vec3,
    /// Scan yaw relative to the base (wrist faces this way).
    pub scan_yaw: f64,
}

#[derive(Debug, Clone)]
pub struct UgvConfig {
    /// Static waypoint legs: `routes[k]` drives to fire slot k.
    pub routes: Vec<Vec<Waypoint>>,
    pub slots: Vec<SlotConfig>,
    pub scan_rect: ScanRect,
    pub spray: SprayConfig,
    pub arm: ArmConfig,
    pub jet_exit_speed: f64,
    pub gravity: f64,
    pub aim_max_step: f64,
    pub aim_tolerance: f64,
    pub water_budget_per_fire: f64,
    pub arrival_tolerance: f64,
}

impl Default for UgvConfig {
    fn default() -> Self {
        Self {
            routes: Vec::new(),
            slots: Vec::new(),
            scan_rect: ScanRect::default(),
            spray: SprayConfig::default(),
            arm: ArmConfig::default(),
            jet_exit_speed: 5.0,
            gravity: 9.81,
            aim_max_step: 0.10,
            aim_tolerance: 0.01,
            water_budget_per_fire: 4.0,
            arrival_tolerance: 0.12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UgvState {
    Drive { slot: usize, waypoint: usize },
    ScanArm { slot: usize, started: f64 },
    Aim { slot: usize },
    SprayPhase1 { slot: usize },
    SprayPhase2 { slot: usize, started: f64 },
    NextFire { slot: usize },
    Done,
}

impl UgvState {
    pub fn name(&self) -> &'static str {
        match self {
            UgvState::Drive { .. } => "drive",
            UgvState::ScanArm { .. } => "scan-arm",
            UgvState::Aim { .. } => "aim",
            UgvState::SprayPhase1 { .. } => "spray-phase1",
            UgvState::SprayPhase2 { .. } => "spray-phase2",
            UgvState::NextFire { .. } => "next-fire",
            UgvState::Done => "done",
        }
    }
}

#[derive(Debug, Clone)]
pub struct UgvInputs {
    /// Localized base pose in the field frame.
    pub pose: Pose,
    /// Freshest bbox-method heat estimate in the BASE frame, if any recent.
    pub heat_estimate: Option<Vec3>,
    /// Current nozzle pose relative to the base.
    pub arm_pose: Pose,
    /// Water sprayed at the current fire so far.
    pub sprayed_this_fire: f64,
    pub now: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct UgvOutput {
    pub base_command: Command,
    /// Target nozzle pose relative to the base.
    pub arm_target: Pose,
    pub pump: bool,
    pub reason: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct UgvFsm {
    pub config: UgvConfig,
    pub state: UgvState,
    /// Aim orientation captured when spraying starts.
    spray_aim: Option<Pose>,
}

impl UgvFsm {
    pub fn new(config: UgvConfig) -> Self {
        Self {
            config,
            state: UgvState::Drive {
                slot: 0,
                waypoint: 0,
            },
            spray_aim: None,
        }
    }

    fn hold_base(&self, slot: usize) -> Command {
        let p = &self.config.slots[slot].approach;
        Command::Goto {
            position: p.translation,
            yaw: p.yaw(),
        }
    }

    fn rest_arm(&self, slot: usize) -> Pose {
        let s = &self.config.slots[slot];
        Pose::from_yaw(s.scan_center, s.scan_yaw)
    }

    pub fn step(&mut self, inputs: &UgvInputs) -> UgvOutput {
        match self.state {
            UgvState::Done => UgvOutput {
                base_command: Command::Hover,
                arm_target: inputs.arm_pose,
                pump: false,
                reason: None,
            },
            UgvState::Drive { slot, waypoint } => self.step_drive(inputs, slot, waypoint),
            UgvState::ScanArm { slot, started } => self.step_scan(inputs, slot, started),
            UgvState::Aim { slot } => self.step_aim(inputs, slot),
            UgvState::SprayPhase1 { slot } => self.step_spray1(inputs, slot),
            UgvState::SprayPhase2 { slot, started } => self.step_spray2(inputs, slot, started),
            UgvState::NextFire { slot } => self.step_next(inputs, slot),
        }
    }

    fn step_drive(&mut self, inputs: &UgvInputs, slot: usize, waypoint: usize) -> UgvOutput {
        let route = &self.config.routes[slot];
        let mut reason = None;
        let mut wp = waypoint;
        while wp < route.len()
            && inputs.pose.translation_distance(&route[wp].pose) <= self.config.arrival_tolerance
            && wrap_angle(inputs.pose.yaw() - route[wp].pose.yaw()).abs() <= 0.2
        {
            wp += 1;
        }
        if wp >= route.len() {
            self.state = UgvState::ScanArm {
                slot,
                started: inputs.now,
            };
            reason = Some("slot-reached");
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: self.rest_arm(slot),
                pump: false,
                reason,
            };
        }
        if wp != waypoint {
            reason = Some("waypoint-advanced");
        }
        self.state = UgvState::Drive { slot, waypoint: wp };
        UgvOutput {
            base_command: Command::Goto {
                position: route[wp].pose.translation,
                yaw: route[wp].pose.yaw(),
            },
            arm_target: self.rest_arm(slot),
            pump: false,
            reason,
        }
    }

    fn step_scan(&mut self, inputs: &UgvInputs, slot: usize, started: f64) -> UgvOutput {
        if inputs.heat_estimate.is_some() {
            self.state = UgvState::Aim { slot };
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: inputs.arm_pose,
                pump: false,
                reason: Some("heat-detected"),
            };
        }
        if inputs.now - started > self.config.scan_rect.period {
            self.state = UgvState::NextFire { slot };
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: inputs.arm_pose,
                pump: false,
                reason: Some("scan-empty"),
            };
        }
        let s = &self.config.slots[slot];
        let (lateral, vertical) = scan_motion(inputs.now - started, &self.config.scan_rect);
        // Rectangle lies in the plane facing the scan yaw: lateral maps to
        // the wrist's left axis, vertical to +z.
        let (sy, cy) = s.scan_yaw.sin_cos();
        let offset = Vec3::new(-sy * lateral, cy * lateral, vertical);
        UgvOutput {
            base_command: self.hold_base(slot),
            arm_target: Pose::from_yaw(s.scan_center + offset, s.scan_yaw),
            pump: false,
            reason: None,
        }
    }

    fn step_aim(&mut self, inputs: &UgvInputs, slot: usize) -> UgvOutput {
        let Some(target) = &inputs.heat_estimate else {
            // Estimate went entirely stale; rescan.
            self.state = UgvState::ScanArm {
                slot,
                started: inputs.now,
            };
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: inputs.arm_pose,
                pump: false,
                reason: Some("estimate-lost"),
            };
        };
        match aim_step(
            target,
            &inputs.arm_pose,
            self.config.jet_exit_speed,
            self.config.gravity,
            &self.config.arm,
            self.config.aim_max_step,
        ) {
            Ok(next) => {
                let solution = nozzle_solution(
                    target,
                    &inputs.arm_pose,
                    self.config.jet_exit_speed,
                    self.config.gravity,
                    &self.config.arm,
                )
                .expect("aim_step succeeded");
                let aligned = inputs
                    .arm_pose
                    .translation_distance(&solution)
                    <= self.config.aim_tolerance
                    && wrap_angle(inputs.arm_pose.yaw() - solution.yaw()).abs() <= 0.02;
                if aligned {
                    self.state = UgvState::SprayPhase1 { slot };
                    self.spray_aim = Some(solution);
                    return UgvOutput {
                        base_command: self.hold_base(slot),
                        arm_target: solution,
                        pump: true,
                        reason: Some("aim-aligned"),
                    };
                }
                UgvOutput {
                    base_command: self.hold_base(slot),
                    arm_target: next,
                    pump: false,
                    reason: None,
                }
            }
            Err(AimError::Unreachable) => {
                self.state = UgvState::NextFire { slot };
                UgvOutput {
                    base_command: self.hold_base(slot),
                    arm_target: inputs.arm_pose,
                    pump: false,
                    reason: Some("aim-unreachable"),
                }
            }
        }
    }

    fn step_spray1(&mut self, inputs: &UgvInputs, slot: usize) -> UgvOutput {
        let aim = self.spray_aim.unwrap_or(inputs.arm_pose);
        if inputs.sprayed_this_fire >= self.config.water_budget_per_fire / 2.0 {
            self.state = UgvState::SprayPhase2 {
                slot,
                started: inputs.now,
            };
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: aim,
                pump: true,
                reason: Some("phase2-start"),
            };
        }
        // First half of the budget: nozzle kept still.
        UgvOutput {
            base_command: self.hold_base(slot),
            arm_target: aim,
            pump: true,
            reason: None,
        }
    }

    fn step_spray2(&mut self, inputs: &UgvInputs, slot: usize, started: f64) -> UgvOutput {
        let aim = self.spray_aim.unwrap_or(inputs.arm_pose);
        if inputs.sprayed_this_fire >= self.config.water_budget_per_fire {
            self.state = UgvState::NextFire { slot };
            return UgvOutput {
                base_command: self.hold_base(slot),
                arm_target: aim,
                pump: false,
                reason: Some("budget-spent"),
            };
        }
        let (pitch, yaw) = spray_pattern(
            inputs.now - started,
            self.config.spray.amplitude_deg.to_radians(),
            self.config.spray.period,
        );
        let tilt = Pose::new(
            Vec3::zeros(),
            nalgebra::UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw)
                * nalgebra::UnitQuaternion::from_axis_angle(&Vec3::y_axis(), pitch),
        );
        UgvOutput {
            base_command: self.hold_base(slot),
            arm_target: aim.compose(&tilt),
            pump: true,
            reason: None,
        }
    }

    fn step_next(&mut self, inputs: &UgvInputs, slot: usize) -> UgvOutput {
        let next = slot + 1;
        let reason;
        if next >= self.config.slots.len() {
            self.state = UgvState::Done;
            reason = Some("mission-complete");
        } else {
            self.state = UgvState::Drive {
                slot: next,
                waypoint: 0,
            };
            reason = Some("next-fire");
        }
        self.spray_aim = None;
        UgvOutput {
            base_command: Command::Hover,
            arm_target: inputs.arm_pose,
            pump: false,
            reason,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autonomy::WaypointKind;

    #[test]
    fn scan_starts_bottom_left_and_is_periodic() {
        let rect = ScanRect {
            width: 0.6,
            height: 0.4,
            period: 8.0,
        };
        let (x0, y0) = scan_motion(0.0, &rect);
        assert!((x0 - (-0.3)).abs() < 1e-12);
        assert!((y0 - (-0.2)).abs() < 1e-12);
        // Quarter period = quarter perimeter along the path.
        let (x, y) = scan_motion(2.0, &rect);
        let s = 2.0 / 8.0 * 2.0 * (0.6 + 0.4); // 0.5 along the path
        assert!((x - (s - 0.3)).abs() < 1e-12 || (x - 0.3).abs() < 1e-12);
        let _ = y;
        // Full period returns to the start.
        let (xf, yf) = scan_motion(8.0, &rect);
        assert!((xf - x0).abs() < 1e-9 && (yf - y0).abs() < 1e-9);
    }

    #[test]
    fn scan_speed_is_constant() {
        let rect = ScanRect::default();
        let perimeter = 2.0 * (rect.width + rect.height);
        let expected = perimeter / rect.period;
        let dt = 1e-4;
        for k in 0..200 {
            let t = k as f64 * rect.period / 200.0 + 3.3 * dt;
            let (x0, y0) = scan_motion(t, &rect);
            let (x1, y1) = scan_motion(t + dt, &rect);
            let v = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt() / dt;
            // Corner samples see two segments; allow √2 there.
            assert!(
                v <= expected * 1.5 + 1e-9 && v >= expected * 0.7 - 1e-9,
                "speed {v} vs {expected}"
            );
        }
    }

    #[test]
    fn spray_pattern_is_centered_and_bounded() {
        let a = 6f64.to_radians();
        let (p0, y0) = spray_pattern(0.0, a, 4.0);
        assert!(p0.abs() < 1e-12 && y0.abs() < 1e-12);
        let mut max_yaw: f64 = 0.0;
        for k in 0..4000 {
            let t = k as f64 * 4.0 / 4000.0;
            let (p, y) = spray_pattern(t, a, 4.0);
            assert!(p.abs() <= a + 1e-12 && y.abs() <= a + 1e-12);
            max_yaw = max_yaw.max(y.abs());
        }
        assert!((max_yaw - a).abs() < 1e-3);
    }

    #[test]
    fn spray_pattern_self_intersects_at_center_once() {
        // Enumerate the curve at 1 kHz over one period; the only crossing
        // of non-adjacent parameter values is the center.
        let a = 6f64.to_radians();
        let period = 4.0;
        let n = 4000;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| spray_pattern(k as f64 * period / n as f64, a, period))
            .collect();
        let tol = a * 0.02;
        let mut crossings = Vec::new();
        for i in 0..n {
            for j in (i + 40)..n {
                if n - (j - i) < 40 {
                    continue; // wrap adjacency
                }
                let d = ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt();
                if d < tol {
                    crossings.push((pts[i].0, pts[i].1));
                }
            }
        }
        assert!(!crossings.is_empty(), "hourglass never crossed itself");
        for (p, y) in crossings {
            assert!(
                p.abs() < a * 0.1 && y.abs() < a * 0.1,
                "crossing away from center: ({p}, {y})"
            );
        }
    }

    fn arm() -> ArmConfig {
        ArmConfig::default()
    }

    #[test]
    fn aim_fixed_point_is_zero_step() {
        let target = Vec3::new(1.4, 0.0, 0.6);
        let nozzle = Pose::from_translation(Vec3::new(0.0, 0.0, 0.9));
        let sol = nozzle_solution(&target, &nozzle, 5.0, 9.81, &arm()).unwrap();
        let step = aim_step(&target, &sol, 5.0, 9.81, &arm(), 0.10).unwrap();
        assert!(sol.translation_distance(&step) < 1e-12);
    }

    #[test]
    fn aim_reaches_solution_in_ten_centimeter_steps() {
        let target = Vec3::new(1.4, 0.0, 0.6);
        // Start 0.35 m (in z) from the solution height.
        let sol_z = {
            let nozzle = Pose::from_translation(Vec3::new(0.0, 0.0, 0.5));
            nozzle_solution(&target, &nozzle, 5.0, 9.81, &arm())
                .unwrap()
                .translation
                .z
        };
        let mut nozzle = Pose::from_translation(Vec3::new(0.0, 0.0, sol_z - 0.35));
        let mut steps = Vec::new();
        for _ in 0..10 {
            let before = nozzle.translation;
            nozzle = aim_step(&target, &nozzle, 5.0, 9.81, &arm(), 0.10).unwrap();
            let moved = (nozzle.translation - before).norm();
            if moved < 1e-9 {
                break;
            }
            steps.push(moved);
        }
        assert_eq!(steps.len(), 4, "steps {steps:?}");
        assert!((steps[0] - 0.10).abs() < 1e-9);
        assert!((steps[1] - 0.10).abs() < 1e-9);
        assert!((steps[2] - 0.10).abs() < 1e-9);
        assert!((steps[3] - 0.05).abs() < 1e-9);
    }

    #[test]
    fn target_above_pump_head_unreachable() {
        let target = Vec3::new(1.4, 0.0, 1.6); // above the 1.5 m head
        let nozzle = Pose::from_translation(Vec3::new(0.0, 0.0, 0.9));
        assert_eq!(
            nozzle_solution(&target, &nozzle, 5.0, 9.81, &arm()),
            Err(AimError::Unreachable)
        );
    }

    fn fsm() -> UgvFsm {
        UgvFsm::new(UgvConfig {
            routes: vec![
                vec![Waypoint {
                    pose: Pose::from_yaw(Vec3::new(2.5, 3.2, 0.0), 1.5708),
                    kind: WaypointKind::Transfer,
                    hover_duration: 0.0,
                }],
                vec![Waypoint {
                    pose: Pose::from_yaw(Vec3::new(4.5, 3.2, 0.0), 1.5708),
                    kind: WaypointKind::Transfer,
                    hover_duration: 0.0,
                }],
            ],
            slots: vec![
                SlotConfig {
                    approach: Pose::from_yaw(Vec3::new(2.5, 3.2, 0.0), 1.5708),
                    scan_center: Vec3::new(0.8, 0.0, 0.6),
                    scan_yaw: 0.0,
                },
                SlotConfig {
                    approach: Pose::from_yaw(Vec3::new(4.5, 3.2, 0.0), 1.5708),
                    scan_center: Vec3::new(0.8, 0.0, 0.6),
                    scan_yaw: 0.0,
                },
            ],
            ..Default::default()
        })
    }

    fn at_slot(slot: usize, now: f64) -> UgvInputs {
        let p = if slot == 0 {
            Vec3::new(2.5, 3.2, 0.0)
        } else {
            Vec3::new(4.5, 3.2, 0.0)
        };
        UgvInputs {
            pose: Pose::from_yaw(p, 1.5708),
            heat_estimate: None,
            arm_pose: Pose::from_yaw(Vec3::new(0.8, 0.0, 0.6), 0.0),
            sprayed_this_fire: 0.0,
            now,
        }
    }

    #[test]
    fn heat_mid_rectangle_enters_aim_within_one_step() {
        let mut f = fsm();
        f.state = UgvState::ScanArm {
            slot: 0,
            started: 0.0,
        };
        let mut inp = at_slot(0, 3.0);
        inp.heat_estimate = Some(Vec3::new(1.4, 0.0, 0.6));
        let out = f.step(&inp);
        assert!(matches!(f.state, UgvState::Aim { slot: 0 }));
        assert_eq!(out.reason, Some("heat-detected"));
    }

    #[test]
    fn empty_rectangle_proceeds_to_next_fire() {
        let mut f = fsm();
        f.state = UgvState::ScanArm {
            slot: 0,
            started: 0.0,
        };
        let period = f.config.scan_rect.period;
        let out = f.step(&at_slot(0, period + 0.1));
        assert!(matches!(f.state, UgvState::NextFire { slot: 0 }));
        assert_eq!(out.reason, Some("scan-empty"));
        // NextFire advances to slot 1's route.
        f.step(&at_slot(0, period + 0.2));
        assert!(matches!(
            f.state,
            UgvState::Drive {
                slot: 1,
                waypoint: 0
            }
        ));
    }

    #[test]
    fn spray_phases_split_the_budget() {
        let mut f = fsm();
        f.state = UgvState::SprayPhase1 { slot: 0 };
        f.spray_aim = Some(Pose::from_yaw(Vec3::new(0.8, 0.0, 0.9), 0.0));
        let mut inp = at_slot(0, 10.0);
        inp.sprayed_this_fire = 1.9;
        let out = f.step(&inp);
        assert!(matches!(f.state, UgvState::SprayPhase1 { .. }));
        assert!(out.pump);
        // Nozzle still: target equals the captured aim.
        assert!(out.arm_target.translation_distance(f.spray_aim.as_ref().unwrap()) < 1e-12);
        inp.sprayed_this_fire = 2.0;
        f.step(&inp);
        assert!(matches!(f.state, UgvState::SprayPhase2 { .. }));
        inp.sprayed_this_fire = 4.0;
        inp.now = 15.0;
        let out = f.step(&inp);
        assert!(matches!(f.state, UgvState::NextFire { slot: 0 }));
        assert!(!out.pump);
        assert_eq!(out.reason, Some("budget-spent"));
    }

    #[test]
    fn both_slots_processed_then_done() {
        let mut f = fsm();
        // Slot 0 scan comes up empty, slot 1 likewise; FSM must still visit
        // both and finish.
        let period = f.config.scan_rect.period;
        let mut now = 0.0;
        let mut guard = 0;
        loop {
            let inp = match f.state {
                UgvState::Drive { slot, .. } => at_slot(slot, now),
                UgvState::ScanArm { slot, .. } => at_slot(slot, now),
                _ => at_slot(0, now),
            };
            f.step(&inp);
            now += period / 4.0;
            guard += 1;
            if matches!(f.state, UgvState::Done) || guard > 100 {
                break;
            }
        }
        assert!(matches!(f.state, UgvState::Done));
    }
}
