use crate::arena::{Aabb, Command};
use crate::geometry::{Pose, UnitVec3, Vec3};

use super::{extinguish_goal, pump_logic, wrap_angle, FilterEvent, Waypoint, WaypointKind};

#[derive(Debug, Clone)]
pub struct UavConfig {
    /// Convex route around the building; cycled while searching.
    pub route: Vec<Waypoint>,
    pub altitude_min: f64,
    pub altitude_max: f64,
    pub arena_bounds: Aabb,
    pub arrival_tolerance: f64,
    /// Pump gating tolerances.
    pub pos_tol: f64,
    pub yaw_tol: f64,
    /// Admitted detections in a row required to engage a fire.
    pub detection_streak: u32,
    /// Seconds without admitted detections before extinguishing is aborted.
    pub lost_timeout: f64,
    /// Max angle between the UAV heading and the bearing to the fire.
    pub heading_gate: f64,
    pub start_position: Vec3,
    pub return_height: f64,
    pub extinguish_distance: f64,
    pub extinguish_height: f64,
}

impl Default for UavConfig {
    fn default() -> Self {
        Self {
            route: Vec::new(),
            altitude_min: 0.8,
            altitude_max: 3.5,
            arena_bounds: Aabb::new(
                Vec3::new(-50.0, -50.0, 0.0),
                Vec3::new(50.0, 50.0, 10.0),
            ),
            arrival_tolerance: 0.2,
            pos_tol: 0.25,
            yaw_tol: 10f64.to_radians(),
            detection_streak: 5,
            lost_timeout: 5.0,
            heading_gate: 45f64.to_radians(),
            start_position: Vec3::zeros(),
            return_height: 2.0,
            extinguish_distance: 2.1,
            extinguish_height: 0.35,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UavState {
    Search {
        waypoint: usize,
        hover_until: Option<f64>,
    },
    Extinguish,
    ReturnHome,
    Stop,
}

impl UavState {
    pub fn name(&self) -> &'static str {
        match self {
            UavState::Search { .. } => "search",
            UavState::Extinguish => "extinguish",
            UavState::ReturnHome => "return-home",
            UavState::Stop => "stop",
        }
    }
}

#[derive(Debug, Clone)]
pub struct UavInputs<'a> {
    /// Localized pose in the field frame.
    pub pose: Pose,
    pub estimate: Option<(Vec3, UnitVec3)>,
    pub tracking: bool,
    pub events: &'a [FilterEvent],
    pub jump: bool,
    pub water: f64,
    pub now: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct UavOutput {
    pub command: Command,
    pub pump: bool,
    pub reason: Option<&'static str>,
}

#[derive(Debug, Clone)]
pub struct UavFsm {
    pub config: UavConfig,
    pub state: UavState,
    pub consecutive_detections: u32,
    last_admitted_time: f64,
    pump_on: bool,
}

impl UavFsm {
    pub fn new(config: UavConfig) -> Self {
        Self {
            config,
            state: UavState::Search {
                waypoint: 0,
                hover_until: None,
            },
            consecutive_detections: 0,
            last_admitted_time: f64::NEG_INFINITY,
            pump_on: false,
        }
    }

    /// Clamp a command target into the arena bounds and altitude corridor.
    fn clamp_target(&self, p: Vec3) -> Vec3 {
        let mut out = self.config.arena_bounds.clamp(&p);
        out.z = out.z.clamp(self.config.altitude_min, self.config.altitude_max);
        out
    }

    pub fn step(&mut self, inputs: &UavInputs) -> UavOutput {
        // Safety dominates every state: a localization jump stops the UAV
        // where it is until a safety pilot takes over.
        if inputs.jump {
            let first = !matches!(self.state, UavState::Stop);
            self.state = UavState::Stop;
            self.pump_on = false;
            return UavOutput {
                command: Command::Hover,
                pump: false,
                reason: first.then_some("jump-detected"),
            };
        }

        for e in inputs.events {
            match e {
                FilterEvent::Admitted => {
                    self.consecutive_detections += 1;
                    self.last_admitted_time = inputs.now;
                }
                FilterEvent::Rejected => self.consecutive_detections = 0,
                FilterEvent::Neutral => {}
            }
        }

        match self.state {
            UavState::Stop => UavOutput {
                command: Command::Hover,
                pump: false,
                reason: None,
            },
            UavState::ReturnHome => {
                let mut target = self.config.start_position;
                target.z = self.config.return_height;
                UavOutput {
                    command: Command::Goto {
                        position: self.clamp_target(target),
                        yaw: inputs.pose.yaw(),
                    },
                    pump: false,
                    reason: None,
                }
            }
            UavState::Search {
                waypoint,
                hover_until,
            } => self.step_search(inputs, waypoint, hover_until),
            UavState::Extinguish => self.step_extinguish(inputs),
        }
    }

    fn step_search(
        &mut self,
        inputs: &UavInputs,
        waypoint: usize,
        hover_until: Option<f64>,
    ) -> UavOutput {
        let mut reason = None;

        // Engage when a tracked fire satisfies all three conditions:
        // streak, altitude corridor, and heading alignment.
        if inputs.tracking {
            if let Some((p, _)) = &inputs.estimate {
                let streak_ok = self.consecutive_detections >= self.config.detection_streak;
                let altitude_ok =
                    p.z >= self.config.altitude_min && p.z <= self.config.altitude_max;
                let bearing = (p - inputs.pose.translation).y.atan2(
                    (p - inputs.pose.translation).x,
                );
                let heading_ok =
                    wrap_angle(bearing - inputs.pose.yaw()).abs() <= self.config.heading_gate;
                if streak_ok && altitude_ok && heading_ok {
                    self.state = UavState::Extinguish;
                    self.last_admitted_time = inputs.now;
                    return self.emit_extinguish(inputs, Some("streak-engaged"));
                }
            }
        }

        if self.config.route.is_empty() {
            return UavOutput {
                command: Command::Hover,
                pump: false,
                reason: None,
            };
        }
        let wp = &self.config.route[waypoint % self.config.route.len()];
        let arrived =
            inputs.pose.translation_distance(&wp.pose) <= self.config.arrival_tolerance;
        let mut next_wp = waypoint;
        let mut next_hover = hover_until;
        if arrived {
            match wp.kind {
                WaypointKind::Transfer => {
                    next_wp = (waypoint + 1) % self.config.route.len();
                    next_hover = None;
                    reason = Some("waypoint-advanced");
                }
                WaypointKind::Observation => match hover_until {
                    None => next_hover = Some(inputs.now + wp.hover_duration),
                    Some(t) if inputs.now >= t => {
                        next_wp = (waypoint + 1) % self.config.route.len();
                        next_hover = None;
                        reason = Some("observation-complete");
                    }
                    Some(_) => {}
                },
            }
        }
        self.state = UavState::Search {
            waypoint: next_wp,
            hover_until: next_hover,
        };
        let target = &self.config.route[next_wp % self.config.route.len()];
        self.pump_on = false;
        UavOutput {
            command: Command::Goto {
                position: self.clamp_target(target.pose.translation),
                yaw: target.pose.yaw(),
            },
            pump: false,
            reason,
        }
    }

    fn step_extinguish(&mut self, inputs: &UavInputs) -> UavOutput {
        if !inputs.tracking {
            self.to_search();
            return self.hold(inputs, Some("tracking-reset"));
        }
        if inputs.now - self.last_admitted_time > self.config.lost_timeout {
            self.to_search();
            return self.hold(inputs, Some("lost-timeout"));
        }
        self.emit_extinguish(inputs, None)
    }

    fn emit_extinguish(&mut self, inputs: &UavInputs, reason: Option<&'static str>) -> UavOutput {
        let Some((p, n)) = &inputs.estimate else {
            self.to_search();
            return self.hold(inputs, Some("estimate-missing"));
        };
        let goal = match extinguish_goal(
            p,
            n,
            self.config.extinguish_distance,
            self.config.extinguish_height,
        ) {
            Ok(g) => g,
            Err(_) => {
                self.to_search();
                return self.hold(inputs, Some("degenerate-normal"));
            }
        };
        if inputs.water <= 0.0 {
            self.state = UavState::ReturnHome;
            self.pump_on = false;
            return self.hold(inputs, Some("water-exhausted"));
        }
        self.pump_on = pump_logic(
            &goal,
            &inputs.pose,
            self.config.pos_tol,
            self.config.yaw_tol,
            self.pump_on,
        );
        UavOutput {
            command: Command::Goto {
                position: self.clamp_target(goal.translation),
                yaw: goal.yaw(),
            },
            pump: self.pump_on,
            reason,
        }
    }

    fn to_search(&mut self) {
        self.state = UavState::Search {
            waypoint: self.nearest_waypoint_default(),
            hover_until: None,
        };
        self.consecutive_detections = 0;
        self.pump_on = false;
    }

    fn nearest_waypoint_default(&self) -> usize {
        0
    }

    fn hold(&self, inputs: &UavInputs, reason: Option<&'static str>) -> UavOutput {
        UavOutput {
            command: Command::Goto {
                position: self.clamp_target(inputs.pose.translation),
                yaw: inputs.pose.yaw(),
            },
            pump: false,
            reason,
        }
    }
}
