//! Deterministic closed-loop mission execution: fixed-step simulation with
//! the tick ordering dynamics → sensors → perception → filter → FSM →
//! actuation. Identical scenario bytes produce byte-identical reports.

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::arena::{
    gnss_measure, render_lidar, render_thermal, simulate_jet, step_dynamics, Command, DriftState,
    JetModel, RobotKind, RobotState,
};
use crate::autonomy::{FilterEvent, UavFsm, UavInputs, UgvFsm, UgvInputs};
use crate::filter::{Detection, DetectionKind, IngestOutcome, RejectReason, Tracker};
use crate::geometry::{PointCloud, Pose, Vec3};
use crate::holes::detect_holes;
use crate::localization::{
    detect_jump, localize, register_scan, select_map, update_offset, LocalizationState,
    OffsetOutcome, PreparedMap, MAP_SWITCH_HYSTERESIS,
};
use crate::scenario::{FsmConfig, RobotConfig, Scenario};
use crate::thermal::{detect_heat, estimate_distance_bbox, localize_heat_lidar};

/// One line of the mission report (newline-delimited JSON).
#[derive(Debug, Clone, serde::Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Record {
    Trace {
        t: f64,
        robot: String,
        state: String,
        x: f64,
        y: f64,
        z: f64,
        yaw: f64,
        pump: bool,
        water: f64,
        reason: String,
        true_x: f64,
        true_y: f64,
        true_z: f64,
        true_yaw: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        arm: Option<[f64; 3]>,
    },
    Detection {
        t: f64,
        robot: String,
        method: String,
        outcome: String,
        x: f64,
        y: f64,
        z: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        est_range: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        true_range: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        pos_err: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        normal_err_deg: Option<f64>,
    },
    Offset {
        t: f64,
        robot: String,
        outcome: String,
        delta: f64,
    },
    MapSwitch {
        t: f64,
        robot: String,
        from: String,
        to: String,
    },
    LocError {
        t: f64,
        robot: String,
        localized_err: f64,
        raw_err: f64,
    },
    Water {
        t: f64,
        robot: String,
        hole: usize,
        delivered: f64,
        cumulative: f64,
    },
    Jump {
        t: f64,
        robot: String,
    },
    Summary {
        per_hole_water: Vec<f64>,
        sprayed_total: Vec<f64>,
        final_states: Vec<(String, String)>,
        completed: bool,
        end_time: f64,
    },
}

#[derive(Debug)]
pub struct MissionReport {
    pub scenario_name: String,
    pub seed: u64,
    pub records: Vec<Record>,
    pub per_hole_water: Vec<f64>,
    /// Water expelled per robot (delivered plus missed).
    pub sprayed_total: Vec<f64>,
    pub final_states: Vec<(String, String)>,
    pub completed: bool,
    pub end_time: f64,
    /// Wall-clock runtime; intentionally excluded from the serialized
    /// report so identical runs stay byte-identical.
    pub wall_time_s: f64,
}

impl MissionReport {
    /// Newline-delimited JSON, one record per line, summary last.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        let summary = Record::Summary {
            per_hole_water: self.per_hole_water.clone(),
            sprayed_total: self.sprayed_total.clone(),
            final_states: self.final_states.clone(),
            completed: self.completed,
            end_time: self.end_time,
        };
        out.push_str(&serde_json::to_string(&summary).expect("summary serializes"));
        out.push('\n');
        out
    }

    /// Plain-text mission trace for one robot, one line per FSM step:
    /// `t state x y z yaw pump water_remaining reason`.
    pub fn trace_log(&self, robot_name: &str) -> String {
        let mut out = String::new();
        for r in &self.records {
            if let Record::Trace {
                t,
                robot,
                state,
                x,
                y,
                z,
                yaw,
                pump,
                water,
                reason,
                ..
            } = r
            {
                if robot != robot_name {
                    continue;
                }
                out.push_str(&format!(
                    "{t:.3} {state} {x:.4} {y:.4} {z:.4} {yaw:.4} {} {water:.4} {reason}\n",
                    if *pump { 1 } else { 0 },
                ));
            }
        }
        out
    }

    pub fn robot_names(&self) -> Vec<String> {
        self.final_states.iter().map(|(n, _)| n.clone()).collect()
    }
}

enum Fsm {
    Uav(UavFsm),
    Ugv(UgvFsm),
}

struct RobotRuntime {
    config: RobotConfig,
    state: RobotState,
    fsm: Fsm,
    tracker: Tracker,
    loc: LocalizationState,
    prepared_maps: Vec<(String, PreparedMap)>,
    drift: DriftState,
    command: Command,
    pump: bool,
    arm_target: Pose,
    last_cloud: Option<PointCloud>,
    /// Filter events since the last FSM tick, in ingest order.
    events: Vec<FilterEvent>,
    /// Freshest base-frame heat estimate (UGV aiming), with its timestamp.
    heat_estimate: Option<(Vec3, f64)>,
    sprayed_total: f64,
    sprayed_this_fire: f64,
    active_fire_slot: usize,
    jump: bool,
    last_accepted_offset_time: f64,
    last_localized: Option<Pose>,
    last_trace_reason: String,
    rng: ChaCha8Rng,
}

impl RobotRuntime {
    fn ego_estimate(&mut self, arena: &crate::arena::ArenaModel, now: f64) -> Pose {
        match (&self.config.gnss, self.config.kind) {
            (Some(model), _) => {
                let near = arena
                    .building_hull()
                    .map(|h| {
                        h.inflated(self.config.near_building_margin)
                            .contains(&self.state.true_pose.translation)
                    })
                    .unwrap_or(false);
                gnss_measure(&self.state.true_pose, model, &mut self.drift, now, near)
            }
            // Wheel odometry: reset at startup, drift-free by default.
            (None, _) => self.config.spawn.inverse().compose(&self.state.true_pose),
        }
    }

    /// Field-frame pose the robot believes: offset ∘ ego once initialized,
    /// the raw ego estimate before that. For odometry robots the raw ego is
    /// in the odometry frame, so spawn is re-applied as a best guess.
    fn believed_pose(&self, ego: &Pose) -> Pose {
        match localize(&self.loc, ego) {
            Ok(p) => p,
            Err(_) => {
                if self.config.gnss.is_some() {
                    *ego
                } else {
                    self.config.spawn.compose(ego)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct TickEvery {
    interval: u64,
}

impl TickEvery {
    fn new(dynamics_hz: f64, hz: f64) -> Self {
        Self {
            interval: ((dynamics_hz / hz).round() as u64).max(1),
        }
    }

    fn fires(&self, tick: u64) -> bool {
        tick % self.interval == 0
    }
}

/// Run a scenario to completion. Never fails; configuration problems abort
/// the run early and flag the report incomplete.
pub fn run_mission(scenario: &Scenario) -> MissionReport {
    let started = std::time::Instant::now();
    let arena = &scenario.arena;
    let dt = 1.0 / scenario.rates.dynamics_hz;
    let lidar_tick = TickEvery::new(scenario.rates.dynamics_hz, scenario.rates.lidar_hz);
    let thermal_tick = TickEvery::new(scenario.rates.dynamics_hz, scenario.rates.thermal_hz);
    let fsm_tick = TickEvery::new(scenario.rates.dynamics_hz, scenario.rates.fsm_hz);
    let reg_tick = TickEvery::new(scenario.rates.dynamics_hz, scenario.rates.registration_hz);
    let hole_tick = TickEvery::new(
        scenario.rates.dynamics_hz,
        scenario.rates.hole_detection_hz,
    );

    let mut records: Vec<Record> = Vec::new();
    let mut per_hole_water = vec![0.0; arena.holes.len()];
    let mut robots: Vec<RobotRuntime> = scenario
        .robots
        .iter()
        .enumerate()
        .map(|(i, cfg)| {
            let prepared = cfg
                .maps
                .iter()
                .map(|m| (m.name.clone(), PreparedMap::build(&m.cloud, 0.5)))
                .collect();
            let rest_arm = match &cfg.fsm {
                FsmConfig::Ugv(u) if !u.slots.is_empty() => {
                    Pose::from_yaw(u.slots[0].scan_center, u.slots[0].scan_yaw)
                }
                _ => Pose::identity(),
            };
            let mut state = RobotState::new(cfg.kind, cfg.spawn, cfg.water_capacity);
            if cfg.kind == RobotKind::Ugv {
                state.arm_pose = Some(rest_arm);
            }
            RobotRuntime {
                state,
                fsm: match &cfg.fsm {
                    FsmConfig::Uav(u) => Fsm::Uav(UavFsm::new(u.clone())),
                    FsmConfig::Ugv(u) => Fsm::Ugv(UgvFsm::new(u.clone())),
                },
                tracker: Tracker::new(cfg.filter.clone()),
                loc: LocalizationState::new(),
                prepared_maps: prepared,
                drift: DriftState::new(scenario.seed.wrapping_add(0x9e37 * (i as u64 + 1))),
                command: Command::Hover,
                pump: false,
                arm_target: rest_arm,
                last_cloud: None,
                events: Vec::new(),
                heat_estimate: None,
                sprayed_total: 0.0,
                sprayed_this_fire: 0.0,
                active_fire_slot: 0,
                jump: false,
                last_accepted_offset_time: 0.0,
                last_localized: None,
                last_trace_reason: "start".into(),
                rng: ChaCha8Rng::seed_from_u64(scenario.seed.wrapping_add(0x51ed * (i as u64 + 1))),
                config: cfg.clone(),
            }
        })
        .collect();

    let total_ticks = (scenario.duration_cap / dt).ceil() as u64;
    let mut end_time = 0.0;
    let mut completed = true;

    'sim: for tick in 0..total_ticks {
        let now = tick as f64 * dt;
        end_time = now;

        for robot in robots.iter_mut() {
            // 1. Dynamics (and pump/arm actuation effects).
            robot.state = step_dynamics(&robot.state, &robot.command, &robot.config.motion, dt);
            if robot.config.kind == RobotKind::Ugv {
                let arm = robot.state.arm_pose.unwrap_or_default();
                robot.state.arm_pose = Some(advance_arm(&arm, &robot.arm_target, dt));
            }
            robot.state.pump_on = robot.pump && robot.state.water_remaining > 0.0;
            if robot.state.pump_on {
                let spray_dt = dt.min(robot.state.water_remaining / robot.config.jet_flow_rate);
                let exit_pose = match robot.config.kind {
                    RobotKind::Uav => robot.state.true_pose.compose(&robot.config.jet_mount),
                    RobotKind::Ugv => robot
                        .state
                        .true_pose
                        .compose(&robot.state.arm_pose.unwrap_or_default())
                        .compose(&robot.config.jet_mount),
                };
                let jet = JetModel {
                    exit_speed: robot.config.jet_exit_speed,
                    exit_pose,
                    flow_rate: robot.config.jet_flow_rate,
                    gravity: 9.81,
                };
                let result = simulate_jet(&jet, arena, spray_dt);
                robot.sprayed_total += robot.config.jet_flow_rate * spray_dt;
                robot.sprayed_this_fire += robot.config.jet_flow_rate * spray_dt;
                robot.state.water_remaining =
                    (robot.config.water_capacity - robot.sprayed_total).max(0.0);
                if let Some(h) = result.hole_hit {
                    per_hole_water[h] += result.water_delivered;
                    records.push(Record::Water {
                        t: now,
                        robot: robot.config.name.clone(),
                        hole: h,
                        delivered: result.water_delivered,
                        cumulative: per_hole_water[h],
                    });
                }
            }

            // 2. Sensors.
            let ego = robot.ego_estimate(arena, now);
            if lidar_tick.fires(tick) {
                let seed = robot.rng.next_u64();
                robot.last_cloud = Some(render_lidar(
                    arena,
                    &robot.state.true_pose,
                    &robot.config.lidar,
                    seed,
                ));
            }

            // 3. Perception: registration first, everything downstream uses
            // the freshest localization.
            if reg_tick.fires(tick) {
                if let Some(cloud) = &robot.last_cloud {
                    let believed = robot.believed_pose(&ego);
                    let position = believed.translation;
                    let selected = select_map(
                        &position,
                        &robot.config.maps,
                        robot.loc.active_map.as_deref(),
                        MAP_SWITCH_HYSTERESIS,
                    )
                    .ok()
                    .map(str::to_string);
                    let map_name = match selected {
                        Some(name) => {
                            if robot.loc.active_map.as_deref() != Some(name.as_str()) {
                                if let Some(from) = robot.loc.active_map.take() {
                                    records.push(Record::MapSwitch {
                                        t: now,
                                        robot: robot.config.name.clone(),
                                        from,
                                        to: name.clone(),
                                    });
                                }
                                robot.loc.active_map = Some(name.clone());
                            }
                            Some(name)
                        }
                        None => None,
                    };
                    if let Some(name) = map_name {
                        let prepared = robot
                            .prepared_maps
                            .iter()
                            .find(|(n, _)| *n == name)
                            .map(|(_, p)| p);
                        if let Some(map) = prepared {
                            let initial = believed.compose(&robot.config.lidar.mount);
                            match register_scan(cloud, map, &initial, &robot.config.registration) {
                                Ok(reg) => {
                                    let registered_base =
                                        reg.pose.compose(&robot.config.lidar.mount.inverse());
                                    let outcome = update_offset(
                                        &mut robot.loc,
                                        &registered_base,
                                        &ego,
                                        now,
                                        &robot.config.offset,
                                    );
                                    let (label, delta) = match outcome {
                                        OffsetOutcome::AcceptedInit => ("init", 0.0),
                                        OffsetOutcome::Accepted { translation_delta } => {
                                            ("accepted", translation_delta)
                                        }
                                        OffsetOutcome::Rejected { translation_delta } => {
                                            ("rejected", translation_delta)
                                        }
                                    };
                                    if label != "rejected" {
                                        robot.last_accepted_offset_time = now;
                                    }
                                    records.push(Record::Offset {
                                        t: now,
                                        robot: robot.config.name.clone(),
                                        outcome: label.into(),
                                        delta,
                                    });
                                }
                                Err(_) => {
                                    records.push(Record::Offset {
                                        t: now,
                                        robot: robot.config.name.clone(),
                                        outcome: "reg-failed".into(),
                                        delta: f64::NAN,
                                    });
                                }
                            }
                        }
                    }
                }
            }

            let localized = robot.believed_pose(&ego);

            // Jump detection on the localized frame.
            if let Some(prev) = &robot.last_localized {
                if detect_jump(prev, &localized) && !robot.jump {
                    robot.jump = true;
                    records.push(Record::Jump {
                        t: now,
                        robot: robot.config.name.clone(),
                    });
                }
            }
            // Localization-loss safety: too long without accepted updates.
            if robot.loc.initialized()
                && robot.config.gnss.is_some()
                && now - robot.last_accepted_offset_time > robot.config.loss_timeout
                && !robot.jump
            {
                robot.jump = true;
                records.push(Record::Jump {
                    t: now,
                    robot: robot.config.name.clone(),
                });
            }
            robot.last_localized = Some(localized);

            if reg_tick.fires(tick) && robot.loc.initialized() {
                let localized_err =
                    localized.translation_distance(&robot.state.true_pose);
                let raw = match robot.config.gnss {
                    Some(_) => ego.translation_distance(&robot.state.true_pose),
                    None => robot
                        .config
                        .spawn
                        .compose(&ego)
                        .translation_distance(&robot.state.true_pose),
                };
                records.push(Record::LocError {
                    t: now,
                    robot: robot.config.name.clone(),
                    localized_err,
                    raw_err: raw,
                });
            }

            // Hole detection.
            if hole_tick.fires(tick) && robot.config.hole_params.is_some() {
                let dets = match &robot.last_cloud {
                    Some(cloud) => {
                        let params = robot.config.hole_params.as_ref().unwrap();
                        let lidar_pose = localized.compose(&robot.config.lidar.mount);
                        detect_holes(cloud, &lidar_pose, params, now)
                    }
                    None => Vec::new(),
                };
                for det in dets {
                    ingest_and_record(
                        robot,
                        det.to_detection(),
                        "hole",
                        None,
                        None,
                        &localized,
                        arena,
                        now,
                        &mut records,
                    );
                }
            }

            // Thermal detection.
            if thermal_tick.fires(tick) {
                let camera_true = thermal_camera_pose(&robot.state, &robot.config);
                let camera_believed = thermal_camera_pose_believed(&localized, robot);
                let seed = robot.rng.next_u64();
                let mut image = render_thermal(arena, &camera_true, &robot.config.thermal_camera, seed);
                image.timestamp = now;
                let contours = detect_heat(
                    &image,
                    robot.config.thermal_lower,
                    robot.config.thermal_upper,
                    robot.config.thermal_min_area,
                    robot.config.thermal_max_area,
                );
                if let Some(contour) = contours.first() {
                    // Bounding-box estimate (always computed, for the
                    // range-comparison metrics; it is the UGV's method).
                    let bbox = estimate_distance_bbox(
                        contour,
                        &robot.config.thermal_camera,
                        robot.config.element_size,
                        &robot.config.calib,
                    );
                    let true_range = nearest_heated_range(arena, &camera_true.translation);
                    if let Ok((est, det_cam)) = &bbox {
                        let det_field = Detection {
                            position: camera_believed.apply(&det_cam.position),
                            normal: crate::geometry::UnitVec3::new_normalize(
                                camera_believed.rotate(&det_cam.normal),
                            ),
                            kind: DetectionKind::Thermal,
                            timestamp: now,
                        };
                        let (pos_err, normal_err) = detection_truth_errors(arena, &det_field);
                        records.push(Record::Detection {
                            t: now,
                            robot: robot.config.name.clone(),
                            method: "thermal-bbox".into(),
                            outcome: "measured".into(),
                            x: det_field.position.x,
                            y: det_field.position.y,
                            z: det_field.position.z,
                            est_range: Some(*est),
                            true_range,
                            pos_err,
                            normal_err_deg: normal_err,
                        });
                        if robot.config.kind == RobotKind::Ugv {
                            // Aiming target in the base frame via the arm chain.
                            let cam_in_base = robot
                                .state
                                .arm_pose
                                .unwrap_or_default()
                                .compose(&robot.config.thermal_mount);
                            let target_base = cam_in_base.apply(&det_cam.position);
                            robot.heat_estimate = Some((target_base, now));
                        }
                    }
                    // LiDAR-projection estimate (the UAV's method).
                    if robot.config.kind == RobotKind::Uav {
                        let lidar_pose = localized.compose(&robot.config.lidar.mount);
                        let projected = robot.last_cloud.as_ref().map(|cloud| {
                            localize_heat_lidar(
                                contour,
                                cloud,
                                &robot.config.extrinsics,
                                &robot.config.thermal_camera,
                                &lidar_pose,
                            )
                        });
                        match projected {
                            Some(Ok(det)) => {
                                let est_range =
                                    Some(lidar_pose.inverse().apply(&det.position).norm());
                                let true_range = nearest_heated_range(
                                    arena,
                                    &robot
                                        .state
                                        .true_pose
                                        .compose(&robot.config.lidar.mount)
                                        .translation,
                                );
                                ingest_and_record(
                                    robot,
                                    det,
                                    "thermal-lidar",
                                    est_range,
                                    true_range,
                                    &localized,
                                    arena,
                                    now,
                                    &mut records,
                                );
                            }
                            Some(Err(_)) => {
                                records.push(Record::Detection {
                                    t: now,
                                    robot: robot.config.name.clone(),
                                    method: "thermal-lidar".into(),
                                    outcome: "insufficient-support".into(),
                                    x: f64::NAN,
                                    y: f64::NAN,
                                    z: f64::NAN,
                                    est_range: None,
                                    true_range: None,
                                    pos_err: None,
                                    normal_err_deg: None,
                                });
                            }
                            None => {}
                        }
                    }
                }
                // A heat estimate older than a second is no longer "fresh".
                if let Some((_, t0)) = robot.heat_estimate {
                    if now - t0 > 1.0 {
                        robot.heat_estimate = None;
                    }
                }
            }

            // 4. Filter housekeeping.
            robot.tracker.check_timeout(now);

            // 5 & 6. FSM and actuation.
            if fsm_tick.fires(tick) {
                let (command, pump, arm_target, state_name, reason, fire_slot) = match &mut robot.fsm
                {
                    Fsm::Uav(fsm) => {
                        let estimate = robot.tracker.estimate().ok().map(|(p, n)| (p, n));
                        let inputs = UavInputs {
                            pose: localized,
                            estimate,
                            tracking: estimate.is_some(),
                            events: &robot.events,
                            jump: robot.jump,
                            water: robot.state.water_remaining,
                            now,
                        };
                        let out = fsm.step(&inputs);
                        (
                            out.command,
                            out.pump,
                            robot.arm_target,
                            fsm.state.name().to_string(),
                            out.reason,
                            0usize,
                        )
                    }
                    Fsm::Ugv(fsm) => {
                        let inputs = UgvInputs {
                            pose: localized,
                            heat_estimate: robot.heat_estimate.map(|(p, _)| p),
                            arm_pose: robot.state.arm_pose.unwrap_or_default(),
                            sprayed_this_fire: robot.sprayed_this_fire,
                            now,
                        };
                        let out = fsm.step(&inputs);
                        let slot = match fsm.state {
                            crate::autonomy::UgvState::Drive { slot, .. }
                            | crate::autonomy::UgvState::ScanArm { slot, .. }
                            | crate::autonomy::UgvState::Aim { slot }
                            | crate::autonomy::UgvState::SprayPhase1 { slot }
                            | crate::autonomy::UgvState::SprayPhase2 { slot, .. }
                            | crate::autonomy::UgvState::NextFire { slot } => slot,
                            crate::autonomy::UgvState::Done => usize::MAX,
                        };
                        (
                            out.base_command,
                            out.pump,
                            out.arm_target,
                            fsm.state.name().to_string(),
                            out.reason,
                            slot,
                        )
                    }
                };
                robot.events.clear();
                robot.command = command;
                robot.pump = pump;
                robot.arm_target = arm_target;
                if fire_slot != usize::MAX && fire_slot != robot.active_fire_slot {
                    robot.active_fire_slot = fire_slot;
                    robot.sprayed_this_fire = 0.0;
                }
                if let Some(r) = reason {
                    robot.last_trace_reason = r.to_string();
                }
                let arm = robot
                    .state
                    .arm_pose
                    .map(|a| [a.translation.x, a.translation.y, a.translation.z]);
                records.push(Record::Trace {
                    t: now,
                    robot: robot.config.name.clone(),
                    state: state_name,
                    x: localized.translation.x,
                    y: localized.translation.y,
                    z: localized.translation.z,
                    yaw: localized.yaw(),
                    pump,
                    water: robot.state.water_remaining,
                    reason: reason.unwrap_or("-").to_string(),
                    true_x: robot.state.true_pose.translation.x,
                    true_y: robot.state.true_pose.translation.y,
                    true_z: robot.state.true_pose.translation.z,
                    true_yaw: robot.state.true_pose.yaw(),
                    arm,
                });
            }
        }

        // Terminal check: all robots parked in a terminal state.
        let all_done = robots.iter().all(|r| match &r.fsm {
            Fsm::Uav(f) => matches!(
                f.state,
                crate::autonomy::UavState::Stop | crate::autonomy::UavState::ReturnHome
            ),
            Fsm::Ugv(f) => matches!(f.state, crate::autonomy::UgvState::Done),
        });
        if all_done {
            end_time = now;
            break 'sim;
        }
    }
    completed &= robots.iter().all(|r| match &r.fsm {
        Fsm::Uav(f) => matches!(
            f.state,
            crate::autonomy::UavState::Stop | crate::autonomy::UavState::ReturnHome
        ),
        Fsm::Ugv(f) => matches!(f.state, crate::autonomy::UgvState::Done),
    });

    let final_states: Vec<(String, String)> = robots
        .iter()
        .map(|r| {
            let s = match &r.fsm {
                Fsm::Uav(f) => f.state.name(),
                Fsm::Ugv(f) => f.state.name(),
            };
            (r.config.name.clone(), s.to_string())
        })
        .collect();
    let sprayed_total = robots.iter().map(|r| r.sprayed_total).collect();

    MissionReport {
        scenario_name: scenario.name.clone(),
        seed: scenario.seed,
        records,
        per_hole_water,
        sprayed_total,
        final_states,
        completed,
        end_time,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

fn advance_arm(current: &Pose, target: &Pose, dt: f64) -> Pose {
    const ARM_SPEED: f64 = 0.5;
    const ARM_ANG_SPEED: f64 = 2.0;
    let delta = target.translation - current.translation;
    let dist = delta.norm();
    let step = ARM_SPEED * dt;
    let translation = if dist <= step {
        target.translation
    } else {
        current.translation + delta * (step / dist)
    };
    let angle = current.rotation.angle_to(&target.rotation);
    let max_turn = ARM_ANG_SPEED * dt;
    let rotation = if angle <= max_turn || angle < 1e-12 {
        target.rotation
    } else {
        current.rotation.slerp(&target.rotation, max_turn / angle)
    };
    Pose {
        translation,
        rotation,
    }
}

fn thermal_camera_pose(state: &RobotState, config: &RobotConfig) -> Pose {
    if config.thermal_on_arm {
        state
            .true_pose
            .compose(&state.arm_pose.unwrap_or_default())
            .compose(&config.thermal_mount)
    } else {
        state.true_pose.compose(&config.thermal_mount)
    }
}

fn thermal_camera_pose_believed(localized: &Pose, robot: &RobotRuntime) -> Pose {
    if robot.config.thermal_on_arm {
        localized
            .compose(&robot.state.arm_pose.unwrap_or_default())
            .compose(&robot.config.thermal_mount)
    } else {
        localized.compose(&robot.config.thermal_mount)
    }
}

fn nearest_heated_range(arena: &crate::arena::ArenaModel, from: &Vec3) -> Option<f64> {
    arena
        .holes
        .iter()
        .filter(|h| h.heated)
        .map(|h| (h.center - from).norm())
        .min_by(|a, b| a.total_cmp(b))
}

/// Position/normal error of a detection against the nearest hole's truth.
fn detection_truth_errors(
    arena: &crate::arena::ArenaModel,
    det: &Detection,
) -> (Option<f64>, Option<f64>) {
    let nearest = arena
        .holes
        .iter()
        .min_by(|a, b| {
            (a.center - det.position)
                .norm()
                .total_cmp(&(b.center - det.position).norm())
        });
    match nearest {
        Some(h) => {
            let pos_err = (det.position - h.center).norm();
            let normal_err = det
                .normal
                .dot(&h.normal)
                .clamp(-1.0, 1.0)
                .acos()
                .to_degrees();
            (Some(pos_err), Some(normal_err))
        }
        None => (None, None),
    }
}

#[allow(clippy::too_many_arguments)]
fn ingest_and_record(
    robot: &mut RobotRuntime,
    det: Detection,
    method: &str,
    est_range: Option<f64>,
    true_range: Option<f64>,
    localized: &Pose,
    arena: &crate::arena::ArenaModel,
    now: f64,
    records: &mut Vec<Record>,
) {
    let outcome = robot
        .tracker
        .ingest(det, &localized.translation, now);
    let event = match outcome {
        IngestOutcome::Admitted | IngestOutcome::Initialized | IngestOutcome::AdmittedInit => {
            FilterEvent::Admitted
        }
        IngestOutcome::Rejected(RejectReason::ThermalSuppressedByHole)
        | IngestOutcome::Rejected(RejectReason::NotTracking) => FilterEvent::Neutral,
        IngestOutcome::Rejected(_) => FilterEvent::Rejected,
    };
    robot.events.push(event);
    let outcome_label = match outcome {
        IngestOutcome::Admitted => "admitted".to_string(),
        IngestOutcome::Initialized => "initialized".to_string(),
        IngestOutcome::AdmittedInit => "admitted-init".to_string(),
        IngestOutcome::Rejected(r) => r.as_str().to_string(),
    };
    let (pos_err, normal_err) = detection_truth_errors(arena, &det);
    records.push(Record::Detection {
        t: now,
        robot: robot.config.name.clone(),
        method: method.into(),
        outcome: outcome_label,
        x: det.position.x,
        y: det.position.y,
        z: det.position.z,
        est_range,
        true_range,
        pos_err,
        normal_err_deg: normal_err,
    });
}

