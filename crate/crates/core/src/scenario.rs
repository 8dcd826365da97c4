//! Scenario files: UTF-8 JSON describing the arena, robots, sensors, routes
//! and thresholds. Unknown keys are rejected; validation reports every
//! violation at once.

use serde::Deserialize;

use crate::arena::{
    Aabb, ArenaModel, DriftModel, Enclosure, Hole, LidarConfig, Material, MotionLimits, RobotKind,
    WallFacet,
};
use crate::autonomy::{
    ArmConfig, ScanRect, SlotConfig, SprayConfig, UavConfig, UgvConfig, Waypoint, WaypointKind,
};
use crate::filter::FilterParams;
use crate::geometry::{PinholeCamera, Pose, UnitVec3, Vec3};
use crate::holes::HoleParams;
use crate::localization::{sample_arena_map, OffsetParams, ReferenceMap, RegistrationParams};
use crate::thermal::{CalibMap, Extrinsics};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    #[serde(default)]
    seed: u64,
    duration_cap: f64,
    #[serde(default)]
    rates: RatesSpec,
    #[serde(default)]
    allow_multiple_heated: bool,
    #[serde(default = "default_extinguish_threshold")]
    extinguish_threshold: f64,
    arena: ArenaSpec,
    robots: Vec<RobotSpec>,
}

fn default_extinguish_threshold() -> f64 {
    0.3
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSpec {
    pub dynamics_hz: f64,
    pub lidar_hz: f64,
    pub thermal_hz: f64,
    pub fsm_hz: f64,
    pub registration_hz: f64,
    pub hole_detection_hz: f64,
}

impl Default for RatesSpec {
    fn default() -> Self {
        Self {
            dynamics_hz: 100.0,
            lidar_hz: 10.0,
            thermal_hz: 9.0,
            fsm_hz: 20.0,
            registration_hz: 2.0,
            hole_detection_hz: 5.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxSpec {
    min: [f64; 3],
    max: [f64; 3],
}

impl BoxSpec {
    fn to_aabb(&self) -> Aabb {
        Aabb::new(Vec3::from(self.min), Vec3::from(self.max))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArenaSpec {
    bounds: BoxSpec,
    #[serde(default)]
    floor_z: f64,
    #[serde(default = "default_ambient")]
    ambient_level: f64,
    #[serde(default = "default_thermal_noise")]
    thermal_noise_sigma: f64,
    /// Add a floor facet spanning the bounds.
    #[serde(default = "default_true")]
    auto_floor: bool,
    walls: Vec<WallSpec>,
    #[serde(default)]
    holes: Vec<HoleSpec>,
}

fn default_ambient() -> f64 {
    300.0
}
fn default_thermal_noise() -> f64 {
    2.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WallSpec {
    corner: [f64; 3],
    edge_u: [f64; 3],
    edge_v: [f64; 3],
    #[serde(default = "default_material")]
    material: Material,
}

fn default_material() -> Material {
    Material::Solid
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HoleSpec {
    center: [f64; 3],
    normal: [f64; 3],
    #[serde(default = "default_hole_diameter")]
    diameter: f64,
    #[serde(default = "default_recess")]
    recess_depth: f64,
    #[serde(default)]
    heated: bool,
    #[serde(default = "default_heat_temp")]
    heat_temp: f64,
    #[serde(default = "default_enclosure")]
    enclosure: Enclosure,
}

fn default_hole_diameter() -> f64 {
    0.15
}
fn default_recess() -> f64 {
    0.10
}
fn default_heat_temp() -> f64 {
    600.0
}
fn default_enclosure() -> Enclosure {
    Enclosure::None
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseSpec {
    position: [f64; 3],
    #[serde(default)]
    yaw_deg: f64,
}

impl PoseSpec {
    fn to_pose(&self) -> Pose {
        Pose::from_yaw(Vec3::from(self.position), self.yaw_deg.to_radians())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct MountSpec {
    translation: [f64; 3],
    pitch_down_deg: f64,
}

impl Default for MountSpec {
    fn default() -> Self {
        Self {
            translation: [0.0; 3],
            pitch_down_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LidarSpec {
    #[serde(default = "default_rings")]
    rings: usize,
    #[serde(default = "default_steps")]
    horizontal_steps: usize,
    #[serde(default = "default_vfov")]
    vertical_fov_deg: f64,
    #[serde(default = "default_max_range")]
    max_range: f64,
    #[serde(default = "default_range_sigma")]
    range_sigma: f64,
    #[serde(default)]
    mount: MountSpec,
}

fn default_rings() -> usize {
    64
}
fn default_steps() -> usize {
    1024
}
fn default_vfov() -> f64 {
    33.2
}
fn default_max_range() -> f64 {
    30.0
}
fn default_range_sigma() -> f64 {
    0.02
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ThermalSpec {
    #[serde(default = "default_camera")]
    camera: PinholeCamera,
    #[serde(default)]
    mount: MountSpec,
    lower: f64,
    #[serde(default = "default_upper")]
    upper: f64,
    #[serde(default = "default_min_area")]
    min_area: usize,
    #[serde(default = "default_max_area")]
    max_area: usize,
    #[serde(default = "default_element")]
    element_size: f64,
    /// Piecewise-linear (raw, corrected) distance calibration knots.
    #[serde(default)]
    calib: Vec<(f64, f64)>,
}

fn default_camera() -> PinholeCamera {
    PinholeCamera {
        fx: 115.0,
        fy: 115.0,
        cx: 80.0,
        cy: 60.0,
        width: 160,
        height: 120,
    }
}
fn default_upper() -> f64 {
    65535.0
}
fn default_min_area() -> usize {
    2
}
fn default_max_area() -> usize {
    4000
}
fn default_element() -> f64 {
    0.15
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct JetSpec {
    exit_speed: f64,
    #[serde(default = "default_flow")]
    flow_rate: f64,
    #[serde(default)]
    mount: MountSpec,
}

fn default_flow() -> f64 {
    0.1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct GnssSpec {
    sigma: f64,
    near_building_factor: f64,
    near_building_margin: f64,
    step_injection: Option<crate::arena::StepInjection>,
}

impl Default for GnssSpec {
    fn default() -> Self {
        Self {
            sigma: 0.0,
            near_building_factor: 5.0,
            near_building_margin: 3.0,
            step_injection: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSpec {
    name: String,
    activation: BoxSpec,
    #[serde(default = "default_spacing")]
    sample_spacing: f64,
    /// Region of the arena sampled into this map (defaults to activation).
    #[serde(default)]
    sample_region: Option<BoxSpec>,
}

fn default_spacing() -> f64 {
    0.05
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LocSpec {
    maps: Vec<MapSpec>,
    #[serde(default)]
    registration: RegistrationParams,
    #[serde(default)]
    offset: OffsetParams,
    /// Seconds without accepted offset updates before a loss event.
    #[serde(default = "default_loss_timeout")]
    loss_timeout: f64,
}

fn default_loss_timeout() -> f64 {
    3.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WaypointSpec {
    position: [f64; 3],
    #[serde(default)]
    yaw_deg: f64,
    #[serde(default = "default_wp_kind")]
    kind: WaypointKind,
    #[serde(default = "default_hover")]
    hover: f64,
}

fn default_wp_kind() -> WaypointKind {
    WaypointKind::Transfer
}
fn default_hover() -> f64 {
    2.0
}

impl WaypointSpec {
    fn to_waypoint(&self) -> Waypoint {
        Waypoint {
            pose: Pose::from_yaw(Vec3::from(self.position), self.yaw_deg.to_radians()),
            kind: self.kind,
            hover_duration: self.hover,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct UavFsmSpec {
    route: Vec<WaypointSpec>,
    altitude: [f64; 2],
    #[serde(default = "default_pos_tol")]
    pos_tol: f64,
    #[serde(default = "default_yaw_tol")]
    yaw_tol_deg: f64,
    #[serde(default = "default_streak")]
    detection_streak: u32,
    #[serde(default = "default_lost")]
    lost_timeout: f64,
    #[serde(default = "default_return_height")]
    return_height: f64,
    #[serde(default = "default_ext_dist")]
    extinguish_distance: f64,
    #[serde(default = "default_ext_height")]
    extinguish_height: f64,
    #[serde(default = "default_arrival")]
    arrival_tolerance: f64,
}

fn default_pos_tol() -> f64 {
    0.25
}
fn default_yaw_tol() -> f64 {
    10.0
}
fn default_streak() -> u32 {
    5
}
fn default_lost() -> f64 {
    5.0
}
fn default_return_height() -> f64 {
    2.0
}
fn default_ext_dist() -> f64 {
    2.1
}
fn default_ext_height() -> f64 {
    0.35
}
fn default_arrival() -> f64 {
    0.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SlotSpec {
    approach: PoseSpec,
    scan_center: [f64; 3],
    #[serde(default)]
    scan_yaw_deg: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct UgvFsmSpec {
    routes: Vec<Vec<WaypointSpec>>,
    slots: Vec<SlotSpec>,
    #[serde(default)]
    scan_rect: ScanRect,
    #[serde(default)]
    spray: SprayConfig,
    #[serde(default)]
    arm: ArmConfig,
    #[serde(default = "default_aim_step")]
    aim_max_step: f64,
    #[serde(default = "default_aim_tol")]
    aim_tolerance: f64,
    #[serde(default = "default_budget")]
    water_budget_per_fire: f64,
    #[serde(default = "default_ugv_arrival")]
    arrival_tolerance: f64,
}

fn default_aim_step() -> f64 {
    0.10
}
fn default_aim_tol() -> f64 {
    0.01
}
fn default_budget() -> f64 {
    4.0
}
fn default_ugv_arrival() -> f64 {
    0.12
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct MotionSpec {
    max_speed_xy: f64,
    max_speed_z: f64,
    max_accel: f64,
    max_yaw_rate: f64,
    #[serde(default = "default_gain")]
    goto_gain: f64,
}

fn default_gain() -> f64 {
    1.2
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSpec {
    name: String,
    kind: RobotKind,
    spawn: PoseSpec,
    water_capacity: f64,
    #[serde(default)]
    motion: Option<MotionSpec>,
    lidar: LidarSpec,
    thermal: ThermalSpec,
    jet: JetSpec,
    #[serde(default)]
    gnss: Option<GnssSpec>,
    localization: LocSpec,
    #[serde(default)]
    hole_detection: Option<HoleParams>,
    #[serde(default)]
    filter: FilterParams,
    #[serde(default)]
    uav: Option<UavFsmSpec>,
    #[serde(default)]
    ugv: Option<UgvFsmSpec>,
}

/// Validated, fully-resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub duration_cap: f64,
    pub rates: RatesSpec,
    pub extinguish_threshold: f64,
    pub arena: ArenaModel,
    pub robots: Vec<RobotConfig>,
}

#[derive(Debug, Clone)]
pub enum FsmConfig {
    Uav(UavConfig),
    Ugv(UgvConfig),
}

#[derive(Debug, Clone)]
pub struct RobotConfig {
    pub name: String,
    pub kind: RobotKind,
    pub spawn: Pose,
    pub water_capacity: f64,
    pub motion: MotionLimits,
    pub lidar: LidarConfig,
    pub thermal_camera: PinholeCamera,
    pub thermal_mount: Pose,
    /// Wrist-mounted camera (UGV): mount composes after the arm pose.
    pub thermal_on_arm: bool,
    pub thermal_lower: f64,
    pub thermal_upper: f64,
    pub thermal_min_area: usize,
    pub thermal_max_area: usize,
    pub element_size: f64,
    pub calib: CalibMap,
    pub extrinsics: Extrinsics,
    pub jet_exit_speed: f64,
    pub jet_flow_rate: f64,
    pub jet_mount: Pose,
    pub gnss: Option<DriftModel>,
    pub near_building_margin: f64,
    pub maps: Vec<ReferenceMap>,
    pub registration: RegistrationParams,
    pub offset: OffsetParams,
    pub loss_timeout: f64,
    pub hole_params: Option<HoleParams>,
    pub filter: FilterParams,
    pub fsm: FsmConfig,
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    build(file)
}

fn build(file: ScenarioFile) -> Result<Scenario, ScenarioError> {
    let mut violations: Vec<String> = Vec::new();

    if file.duration_cap <= 0.0 {
        violations.push("duration_cap must be positive".into());
    }
    for (label, hz) in [
        ("dynamics_hz", file.rates.dynamics_hz),
        ("lidar_hz", file.rates.lidar_hz),
        ("thermal_hz", file.rates.thermal_hz),
        ("fsm_hz", file.rates.fsm_hz),
        ("registration_hz", file.rates.registration_hz),
        ("hole_detection_hz", file.rates.hole_detection_hz),
    ] {
        if hz <= 0.0 {
            violations.push(format!("rates.{label} must be positive"));
        }
    }

    let bounds = file.arena.bounds.to_aabb();
    let mut walls: Vec<WallFacet> = file
        .arena
        .walls
        .iter()
        .map(|w| WallFacet {
            corner: Vec3::from(w.corner),
            edge_u: Vec3::from(w.edge_u),
            edge_v: Vec3::from(w.edge_v),
            material: w.material,
        })
        .collect();
    if file.arena.auto_floor {
        walls.push(WallFacet {
            corner: Vec3::new(bounds.min.x, bounds.min.y, file.arena.floor_z),
            edge_u: Vec3::new(bounds.max.x - bounds.min.x, 0.0, 0.0),
            edge_v: Vec3::new(0.0, bounds.max.y - bounds.min.y, 0.0),
            material: Material::Solid,
        });
    }
    let holes: Vec<Hole> = file
        .arena
        .holes
        .iter()
        .map(|h| Hole {
            center: Vec3::from(h.center),
            normal: UnitVec3::new_normalize(Vec3::from(h.normal)),
            diameter: h.diameter,
            recess_depth: h.recess_depth,
            heated: h.heated,
            heat_temp: h.heat_temp,
            enclosure: h.enclosure,
        })
        .collect();
    let arena = ArenaModel {
        walls,
        holes,
        floor_z: file.arena.floor_z,
        bounds,
        ambient_level: file.arena.ambient_level,
        thermal_noise_sigma: file.arena.thermal_noise_sigma,
    };
    if let Err(e) = arena.validate() {
        violations.push(format!("arena: {e}"));
    }
    let heated = arena.holes.iter().filter(|h| h.heated).count();
    if heated != 1 && !file.allow_multiple_heated {
        violations.push(format!(
            "expected exactly one heated hole, found {heated} (set allow_multiple_heated to override)"
        ));
    }

    let mut names = std::collections::HashSet::new();
    for r in &file.robots {
        if !names.insert(r.name.clone()) {
            violations.push(format!("duplicate robot name {:?}", r.name));
        }
    }
    if file.robots.is_empty() {
        violations.push("scenario has no robots".into());
    }

    let hull = arena.building_hull();
    let mut robots = Vec::new();
    for r in &file.robots {
        match build_robot(r, &arena, &bounds, hull.as_ref(), &mut violations) {
            Some(cfg) => robots.push(cfg),
            None => {}
        }
    }

    if !violations.is_empty() {
        return Err(ScenarioError::Validation(violations));
    }
    Ok(Scenario {
        name: file.name,
        seed: file.seed,
        duration_cap: file.duration_cap,
        rates: file.rates,
        extinguish_threshold: file.extinguish_threshold,
        arena,
        robots,
    })
}

fn build_robot(
    r: &RobotSpec,
    arena: &ArenaModel,
    bounds: &Aabb,
    hull: Option<&Aabb>,
    violations: &mut Vec<String>,
) -> Option<RobotConfig> {
    let who = &r.name;
    if let Err(e) = r.thermal.camera.validate() {
        violations.push(format!("{who}: thermal camera: {e}"));
    }
    let calib = CalibMap {
        knots: r.thermal.calib.clone(),
    };
    if let Err(e) = calib.validate() {
        violations.push(format!("{who}: {e}"));
    }
    if r.jet.exit_speed <= 0.0 {
        violations.push(format!("{who}: jet exit_speed must be positive"));
    }
    if r.jet.flow_rate <= 0.0 {
        violations.push(format!("{who}: jet flow_rate must be positive"));
    }
    if r.localization.maps.is_empty() {
        violations.push(format!("{who}: localization needs at least one map"));
    }
    if !bounds.contains(&Vec3::from(r.spawn.position)) {
        violations.push(format!("{who}: spawn outside arena bounds"));
    }

    let lidar_mount = Pose::pitched_mount(
        r.lidar.mount.pitch_down_deg.to_radians(),
        Vec3::from(r.lidar.mount.translation),
    );
    let thermal_mount = Pose::camera_in_body(
        r.thermal.mount.pitch_down_deg.to_radians(),
        Vec3::from(r.thermal.mount.translation),
    );
    let thermal_on_arm = r.kind == RobotKind::Ugv;
    // Camera pose expressed in the LiDAR frame (body-mounted rigs only).
    let extrinsics = Extrinsics {
        camera_in_lidar: lidar_mount.inverse().compose(&thermal_mount),
    };

    let motion = match (&r.motion, r.kind) {
        (Some(m), _) => MotionLimits {
            max_speed_xy: m.max_speed_xy,
            max_speed_z: m.max_speed_z,
            max_accel: m.max_accel,
            max_yaw_rate: m.max_yaw_rate,
            goto_gain: m.goto_gain,
        },
        (None, RobotKind::Uav) => MotionLimits::default(),
        (None, RobotKind::Ugv) => MotionLimits {
            max_speed_xy: 0.6,
            max_speed_z: 0.0,
            max_accel: 1.0,
            max_yaw_rate: 0.8,
            goto_gain: 1.0,
        },
    };

    let maps: Vec<ReferenceMap> = r
        .localization
        .maps
        .iter()
        .map(|m| {
            let region = m
                .sample_region
                .as_ref()
                .map(|b| b.to_aabb())
                .unwrap_or_else(|| m.activation.to_aabb().inflated(1.0));
            ReferenceMap {
                name: m.name.clone(),
                cloud: sample_arena_map(arena, m.sample_spacing, Some(&region)),
                activation: m.activation.to_aabb(),
            }
        })
        .collect();
    for m in &maps {
        if m.cloud.is_empty() {
            violations.push(format!("{who}: map {:?} sampled no surface points", m.name));
        }
    }

    let fsm = match (r.kind, &r.uav, &r.ugv) {
        (RobotKind::Uav, Some(spec), None) => {
            for (i, wp) in spec.route.iter().enumerate() {
                if !bounds.contains(&Vec3::from(wp.position)) {
                    violations.push(format!("{who}: route waypoint {i} outside arena bounds"));
                }
            }
            if let Some(hull) = hull {
                // Transfer legs must stay outside the building footprint.
                let route: Vec<Vec3> = spec.route.iter().map(|w| Vec3::from(w.position)).collect();
                for k in 0..route.len() {
                    let a = route[k];
                    let b = route[(k + 1) % route.len()];
                    let steps = ((b - a).norm() / 0.25).ceil() as usize + 1;
                    for s in 0..=steps {
                        let p = a + (b - a) * (s as f64 / steps as f64);
                        let mut inside = hull.contains(&p);
                        // The hull has zero thickness walls; test xy footprint.
                        inside = inside
                            || (p.x > hull.min.x
                                && p.x < hull.max.x
                                && p.y > hull.min.y
                                && p.y < hull.max.y
                                && p.z < hull.max.z);
                        if inside {
                            violations.push(format!(
                                "{who}: route segment {k} crosses the building hull"
                            ));
                            break;
                        }
                    }
                }
            }
            FsmConfig::Uav(UavConfig {
                route: spec.route.iter().map(|w| w.to_waypoint()).collect(),
                altitude_min: spec.altitude[0],
                altitude_max: spec.altitude[1],
                arena_bounds: *bounds,
                arrival_tolerance: spec.arrival_tolerance,
                pos_tol: spec.pos_tol,
                yaw_tol: spec.yaw_tol_deg.to_radians(),
                detection_streak: spec.detection_streak,
                lost_timeout: spec.lost_timeout,
                heading_gate: 45f64.to_radians(),
                start_position: Vec3::from(r.spawn.position),
                return_height: spec.return_height,
                extinguish_distance: spec.extinguish_distance,
                extinguish_height: spec.extinguish_height,
            })
        }
        (RobotKind::Ugv, None, Some(spec)) => {
            if spec.slots.len() != 2 {
                violations.push(format!(
                    "{who}: expected exactly two fire slots, found {}",
                    spec.slots.len()
                ));
            }
            if spec.routes.len() != spec.slots.len() {
                violations.push(format!("{who}: routes and slots must pair up"));
            }
            for (ri, route) in spec.routes.iter().enumerate() {
                for (wi, wp) in route.iter().enumerate() {
                    if !bounds.contains(&Vec3::from(wp.position)) {
                        violations.push(format!(
                            "{who}: route {ri} waypoint {wi} outside arena bounds"
                        ));
                    }
                }
            }
            FsmConfig::Ugv(UgvConfig {
                routes: spec
                    .routes
                    .iter()
                    .map(|route| route.iter().map(|w| w.to_waypoint()).collect())
                    .collect(),
                slots: spec
                    .slots
                    .iter()
                    .map(|s| SlotConfig {
                        approach: s.approach.to_pose(),
                        scan_center: Vec3::from(s.scan_center),
                        scan_yaw: s.scan_yaw_deg.to_radians(),
                    })
                    .collect(),
                scan_rect: spec.scan_rect,
                spray: spec.spray,
                arm: spec.arm.clone(),
                jet_exit_speed: r.jet.exit_speed,
                gravity: 9.81,
                aim_max_step: spec.aim_max_step,
                aim_tolerance: spec.aim_tolerance,
                water_budget_per_fire: spec.water_budget_per_fire,
                arrival_tolerance: spec.arrival_tolerance,
            })
        }
        _ => {
            violations.push(format!(
                "{who}: robot kind {:?} needs its matching fsm section (uav/ugv)",
                r.kind
            ));
            return None;
        }
    };

    Some(RobotConfig {
        name: r.name.clone(),
        kind: r.kind,
        spawn: r.spawn.to_pose(),
        water_capacity: r.water_capacity,
        motion,
        lidar: LidarConfig {
            rings: r.lidar.rings,
            horizontal_steps: r.lidar.horizontal_steps,
            vertical_fov: r.lidar.vertical_fov_deg.to_radians(),
            max_range: r.lidar.max_range,
            range_sigma: r.lidar.range_sigma,
            mount: lidar_mount,
        },
        thermal_camera: r.thermal.camera,
        thermal_mount,
        thermal_on_arm,
        thermal_lower: r.thermal.lower,
        thermal_upper: r.thermal.upper,
        thermal_min_area: r.thermal.min_area,
        thermal_max_area: r.thermal.max_area,
        element_size: r.thermal.element_size,
        calib,
        extrinsics,
        jet_exit_speed: r.jet.exit_speed,
        jet_flow_rate: r.jet.flow_rate,
        jet_mount: Pose::pitched_mount(
            r.jet.mount.pitch_down_deg.to_radians(),
            Vec3::from(r.jet.mount.translation),
        ),
        gnss: r.gnss.as_ref().map(|g| DriftModel {
            sigma: g.sigma,
            near_building_factor: g.near_building_factor,
            step_injection: g.step_injection,
        }),
        near_building_margin: r.gnss.as_ref().map(|g| g.near_building_margin).unwrap_or(3.0),
        maps,
        registration: r.localization.registration.clone(),
        offset: r.localization.offset.clone(),
        loss_timeout: r.localization.loss_timeout,
        hole_params: r.hole_detection.clone(),
        filter: r.filter.clone(),
        fsm,
    })
}
