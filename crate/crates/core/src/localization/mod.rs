//! Scan-to-map registration with drift-offset bookkeeping, jump detection,
//! and indoor/outdoor map switching. The offset transformation maps the
//! robot's drifting ego estimate into the fixed field frame; consecutive
//! offset updates are bounded to reject bad registrations.

mod icp;

pub use icp::{register_scan, PreparedMap, Registration, RegistrationError, RegistrationParams};

use std::path::Path;

use crate::arena::{Aabb, ArenaModel, Material};
use crate::geometry::{PointCloud, Pose, Vec3};

/// Reference cloud in the field frame with the region in which it is the
/// active localization map.
#[derive(Debug, Clone)]
pub struct ReferenceMap {
    pub name: String,
    pub cloud: PointCloud,
    pub activation: Aabb,
}

#[derive(Debug, thiserror::Error)]
pub enum LocError {
    #[error("localization offset not initialized")]
    Uninitialized,
    #[error("position lies in no map activation region")]
    NoMap,
    #[error(transparent)]
    MapIo(#[from] crate::geometry::CloudIoError),
    #[error("bad map sidecar: {0}")]
    Sidecar(String),
}

/// Sample the arena's solid surfaces on a regular grid to build a reference
/// map cloud — the artifact's stand-in for a mapping run. Acrylic facets do
/// not return LiDAR and are not sampled; hole apertures are left open.
pub fn sample_arena_map(arena: &ArenaModel, spacing: f64, region: Option<&Aabb>) -> PointCloud {
    let mut cloud = PointCloud::new("field");
    for wall in &arena.walls {
        if wall.material == Material::Acrylic {
            continue;
        }
        let nu = (wall.edge_u.norm() / spacing).ceil() as usize;
        let nv = (wall.edge_v.norm() / spacing).ceil() as usize;
        for a in 0..=nu {
            for b in 0..=nv {
                let p = wall.corner
                    + wall.edge_u * (a as f64 / nu as f64)
                    + wall.edge_v * (b as f64 / nv as f64);
                if let Some(r) = region {
                    if !r.contains(&p) {
                        continue;
                    }
                }
                let in_hole = arena.holes.iter().any(|h| {
                    h.normal.dot(&(p - h.center)).abs() < 1e-6
                        && (p - h.center).norm() <= h.radius()
                });
                if !in_hole {
                    cloud.points.push(p);
                }
            }
        }
    }
    cloud
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OffsetParams {
    /// Bound on the translation between consecutive accepted offsets.
    pub max_translation_delta: f64,
    /// Bound on the rotation delta (degrees); anti-jump extension.
    pub max_rotation_delta_deg: f64,
}

impl Default for OffsetParams {
    fn default() -> Self {
        Self {
            max_translation_delta: 0.30,
            max_rotation_delta_deg: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffsetOutcome {
    /// First update; exempt from the delta bound.
    AcceptedInit,
    Accepted { translation_delta: f64 },
    Rejected { translation_delta: f64 },
}

/// Drift-correction bookkeeping for one robot.
#[derive(Debug, Clone, Default)]
pub struct LocalizationState {
    pub offset: Option<Pose>,
    pub last_localized: Option<Pose>,
    pub last_update_time: Option<f64>,
    pub active_map: Option<String>,
    /// Set when the latest candidate was rejected.
    pub stale: bool,
}

impl LocalizationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn initialized(&self) -> bool {
        self.offset.is_some()
    }
}

/// Fold a successful registration into the offset. The candidate offset is
/// `registered ∘ ego⁻¹`; it is accepted iff its translation delta from the
/// current offset stays under the bound (initialization is exempt).
pub fn update_offset(
    state: &mut LocalizationState,
    registered: &Pose,
    ego_estimate: &Pose,
    now: f64,
    params: &OffsetParams,
) -> OffsetOutcome {
    let candidate = registered.compose(&ego_estimate.inverse());
    match &state.offset {
        None => {
            state.offset = Some(candidate);
            state.last_update_time = Some(now);
            state.stale = false;
            OffsetOutcome::AcceptedInit
        }
        Some(current) => {
            let translation_delta = candidate.translation_distance(current);
            let rotation_delta = candidate.rotation_angle(current);
            if translation_delta < params.max_translation_delta
                && rotation_delta <= params.max_rotation_delta_deg.to_radians()
            {
                state.offset = Some(candidate);
                state.last_update_time = Some(now);
                state.stale = false;
                OffsetOutcome::Accepted { translation_delta }
            } else {
                state.stale = true;
                OffsetOutcome::Rejected { translation_delta }
            }
        }
    }
}

/// Localized pose: exact composition `offset ∘ ego`, no smoothing.
pub fn localize(state: &LocalizationState, ego_estimate: &Pose) -> Result<Pose, LocError> {
    let offset = state.offset.as_ref().ok_or(LocError::Uninitialized)?;
    Ok(offset.compose(ego_estimate))
}

/// True iff the localized frame moved more than 1 m between updates.
pub fn detect_jump(previous: &Pose, new: &Pose) -> bool {
    previous.translation_distance(new) > 1.0
}

pub const MAP_SWITCH_HYSTERESIS: f64 = 0.5;

/// Highest-priority (earliest-listed) map whose activation region contains
/// the position. A switch away from the current map only happens once the
/// position is inside the new map's region contracted by the hysteresis
/// band, or outside the current map's region expanded by it.
pub fn select_map<'m>(
    position: &Vec3,
    maps: &'m [ReferenceMap],
    current: Option<&str>,
    hysteresis: f64,
) -> Result<&'m str, LocError> {
    let current_entry = current.and_then(|c| maps.iter().find(|m| m.name == c));
    if let Some(cur) = current_entry {
        let keep = cur.activation.inflated(hysteresis).contains(position);
        if keep {
            // Switch only to a strictly higher-priority map whose contracted
            // region already contains us.
            for m in maps {
                if m.name == cur.name {
                    break;
                }
                if m.activation.inflated(-hysteresis).contains(position) {
                    return Ok(&m.name);
                }
            }
            return Ok(&cur.name);
        }
    }
    maps.iter()
        .find(|m| m.activation.contains(position))
        .map(|m| m.name.as_str())
        .ok_or(LocError::NoMap)
}

#[derive(serde::Serialize, serde::Deserialize)]
struct MapSidecar {
    name: String,
    activation_min: [f64; 3],
    activation_max: [f64; 3],
}

fn sidecar_path(cloud_path: &Path) -> std::path::PathBuf {
    let mut os = cloud_path.as_os_str().to_owned();
    os.push(".meta.json");
    std::path::PathBuf::from(os)
}

pub fn save_map(map: &ReferenceMap, cloud_path: &Path) -> Result<(), LocError> {
    map.cloud.save(cloud_path)?;
    let sidecar = MapSidecar {
        name: map.name.clone(),
        activation_min: map.activation.min.into(),
        activation_max: map.activation.max.into(),
    };
    std::fs::write(
        sidecar_path(cloud_path),
        serde_json::to_string_pretty(&sidecar).expect("sidecar serializes"),
    )
    .map_err(crate::geometry::CloudIoError::Io)?;
    Ok(())
}

pub fn load_map(cloud_path: &Path) -> Result<ReferenceMap, LocError> {
    let cloud = PointCloud::load(cloud_path)?;
    let meta_path = sidecar_path(cloud_path);
    let (name, activation) = if meta_path.exists() {
        let text = std::fs::read_to_string(&meta_path).map_err(crate::geometry::CloudIoError::Io)?;
        let sidecar: MapSidecar =
            serde_json::from_str(&text).map_err(|e| LocError::Sidecar(e.to_string()))?;
        (
            sidecar.name,
            Aabb::new(
                Vec3::from(sidecar.activation_min),
                Vec3::from(sidecar.activation_max),
            ),
        )
    } else {
        let huge = 1e6;
        (
            cloud_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "map".into()),
            Aabb::new(Vec3::new(-huge, -huge, -huge), Vec3::new(huge, huge, huge)),
        )
    };
    if cloud.is_empty() {
        return Err(LocError::Sidecar("map cloud is empty".into()));
    }
    Ok(ReferenceMap {
        name,
        cloud,
        activation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arena::{render_lidar, Enclosure, Hole, LidarConfig, WallFacet};
    use crate::geometry::UnitVec3;

    /// Two perpendicular walls plus a floor facet: fully constrains ICP.
    fn corner_arena() -> ArenaModel {
        ArenaModel {
            walls: vec![
                WallFacet {
                    corner: Vec3::new(4.0, -4.0, 0.0),
                    edge_u: Vec3::new(0.0, 8.0, 0.0),
                    edge_v: Vec3::new(0.0, 0.0, 3.0),
                    material: Material::Solid,
                },
                WallFacet {
                    corner: Vec3::new(-4.0, 4.0, 0.0),
                    edge_u: Vec3::new(8.0, 0.0, 0.0),
                    edge_v: Vec3::new(0.0, 0.0, 3.0),
                    material: Material::Solid,
                },
                WallFacet {
                    corner: Vec3::new(-4.0, -4.0, 0.0),
                    edge_u: Vec3::new(8.0, 0.0, 0.0),
                    edge_v: Vec3::new(0.0, 8.0, 0.0),
                    material: Material::Solid,
                },
            ],
            holes: vec![Hole {
                center: Vec3::new(4.0, 0.0, 1.2),
                normal: UnitVec3::new_normalize(-Vec3::x()),
                diameter: 0.15,
                recess_depth: 0.10,
                heated: false,
                heat_temp: 600.0,
                enclosure: Enclosure::None,
            }],
            floor_z: 0.0,
            bounds: Aabb::new(Vec3::new(-10.0, -10.0, -1.0), Vec3::new(10.0, 10.0, 5.0)),
            ambient_level: 300.0,
            thermal_noise_sigma: 0.0,
        }
    }

    fn prepared(arena: &ArenaModel) -> PreparedMap {
        let cloud = sample_arena_map(arena, 0.05, None);
        PreparedMap::build(&cloud, 0.5)
    }

    #[test]
    fn self_registration_recovers_truth() {
        let arena = corner_arena();
        let map_cloud = sample_arena_map(&arena, 0.05, None);
        let map = PreparedMap::build(&map_cloud, 0.5);
        // Scan = the map cloud itself, expressed in a body frame.
        let truth = Pose::from_yaw(Vec3::new(0.5, -0.3, 1.0), 0.2);
        let inv = truth.inverse();
        let mut scan = PointCloud::new("lidar");
        scan.points = map_cloud
            .points
            .iter()
            .step_by(7)
            .map(|p| inv.apply(p))
            .collect();
        let reg = register_scan(&scan, &map, &truth, &RegistrationParams::default()).unwrap();
        assert!(reg.pose.translation_distance(&truth) < 1e-6);
        assert!(reg.pose.rotation_angle(&truth) < 1e-6);
        assert!(reg.rms < 1e-6);
    }

    #[test]
    fn perturbed_initial_converges() {
        let arena = corner_arena();
        let map = prepared(&arena);
        let truth = Pose::from_yaw(Vec3::new(0.0, 0.0, 1.2), 0.3);
        let scan = render_lidar(
            &arena,
            &truth,
            &LidarConfig {
                range_sigma: 0.01,
                rings: 32,
                horizontal_steps: 512,
                ..Default::default()
            },
            1,
        );
        let initial = Pose::from_yaw(
            truth.translation + Vec3::new(0.25, -0.15, 0.05),
            0.3 + 5f64.to_radians(),
        );
        let params = RegistrationParams {
            scan_stride: 4,
            ..Default::default()
        };
        let reg = register_scan(&scan, &map, &initial, &params).unwrap();
        assert!(
            reg.pose.translation_distance(&truth) < 0.03,
            "translation error {}",
            reg.pose.translation_distance(&truth)
        );
        assert!(
            reg.pose.rotation_angle(&truth).to_degrees() < 1.0,
            "rotation error {}°",
            reg.pose.rotation_angle(&truth).to_degrees()
        );
    }

    #[test]
    fn geometry_absent_from_map_fails() {
        let arena = corner_arena();
        let map = prepared(&arena);
        // Scan of a wall that exists nowhere in the map.
        let mut other = corner_arena();
        other.walls = vec![WallFacet {
            corner: Vec3::new(20.0, -4.0, 0.0),
            edge_u: Vec3::new(0.0, 8.0, 0.0),
            edge_v: Vec3::new(0.0, 0.0, 3.0),
            material: Material::Solid,
        }];
        other.holes.clear();
        let scan = render_lidar(
            &other,
            &Pose::from_translation(Vec3::new(14.0, 0.0, 1.2)),
            &LidarConfig {
                rings: 16,
                horizontal_steps: 256,
                ..Default::default()
            },
            2,
        );
        let initial = Pose::from_translation(Vec3::new(14.0, 0.0, 1.2));
        assert!(register_scan(&scan, &map, &initial, &RegistrationParams::default()).is_err());
    }

    #[test]
    fn offset_bound_accepts_and_rejects() {
        let mut state = LocalizationState::new();
        let params = OffsetParams::default();
        let ego = Pose::identity();
        // Initialization is exempt from the bound.
        let big = Pose::from_translation(Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(
            update_offset(&mut state, &big, &ego, 0.0, &params),
            OffsetOutcome::AcceptedInit
        );
        // 0.10 m delta accepted.
        let near = Pose::from_translation(Vec3::new(2.10, 0.0, 0.0));
        assert!(matches!(
            update_offset(&mut state, &near, &ego, 0.5, &params),
            OffsetOutcome::Accepted { .. }
        ));
        // 0.50 m delta rejected, offset unchanged.
        let far = Pose::from_translation(Vec3::new(2.60, 0.0, 0.0));
        assert!(matches!(
            update_offset(&mut state, &far, &ego, 1.0, &params),
            OffsetOutcome::Rejected { .. }
        ));
        assert!(state.stale);
        assert_eq!(state.offset.unwrap().translation.x, 2.10);
    }

    #[test]
    fn localize_is_exact_composition() {
        let mut state = LocalizationState::new();
        assert!(localize(&state, &Pose::identity()).is_err());
        state.offset = Some(Pose::from_translation(Vec3::new(1.0, 0.0, 0.0)));
        let out = localize(&state, &Pose::identity()).unwrap();
        assert_eq!(out.translation, Vec3::new(1.0, 0.0, 0.0));
        let ego = Pose::from_yaw(Vec3::new(0.0, 2.0, 0.0), 0.3);
        let out = localize(&state, &ego).unwrap();
        assert_eq!(out.translation, Vec3::new(1.0, 2.0, 0.0));
    }

    #[test]
    fn jump_threshold_is_one_meter() {
        let a = Pose::identity();
        assert!(!detect_jump(&a, &a));
        let b = Pose::from_translation(Vec3::new(0.99, 0.0, 0.0));
        assert!(!detect_jump(&a, &b));
        let c = Pose::from_translation(Vec3::new(1.01, 0.0, 0.0));
        assert!(detect_jump(&a, &c));
    }

    fn two_maps() -> Vec<ReferenceMap> {
        let mut cloud = PointCloud::new("field");
        cloud.points.push(Vec3::zeros());
        vec![
            ReferenceMap {
                name: "indoor".into(),
                cloud: cloud.clone(),
                activation: Aabb::new(Vec3::new(0.0, 0.0, -1.0), Vec3::new(6.0, 5.0, 3.0)),
            },
            ReferenceMap {
                name: "outdoor".into(),
                cloud,
                activation: Aabb::new(Vec3::new(-10.0, -10.0, -1.0), Vec3::new(2.0, 10.0, 3.0)),
            },
        ]
    }

    #[test]
    fn deep_positions_select_their_maps() {
        let maps = two_maps();
        let out = select_map(&Vec3::new(-5.0, 2.0, 0.0), &maps, None, 0.5).unwrap();
        assert_eq!(out, "outdoor");
        let ind = select_map(&Vec3::new(3.0, 2.5, 0.0), &maps, None, 0.5).unwrap();
        assert_eq!(ind, "indoor");
        assert!(select_map(&Vec3::new(50.0, 0.0, 0.0), &maps, None, 0.5).is_err());
    }

    #[test]
    fn doorway_crossing_switches_exactly_once() {
        let maps = two_maps();
        let mut active = "outdoor".to_string();
        let mut switches = 0;
        // March through the doorway with ±0.2 m jitter around the trend.
        for k in 0u64..100 {
            let trend = -2.0 + 4.0 * k as f64 / 99.0;
            let jitter = 0.2 * ((k.wrapping_mul(2654435761) % 100) as f64 / 50.0 - 1.0);
            let pos = Vec3::new(trend + jitter, 2.3, 0.0);
            let next = select_map(&pos, &maps, Some(&active), 0.5).unwrap();
            if next != active {
                switches += 1;
                active = next.to_string();
            }
        }
        assert_eq!(active, "indoor");
        assert_eq!(switches, 1, "map flapped {switches} times");
    }

    #[test]
    fn map_file_round_trip() {
        let dir = std::env::temp_dir().join(format!("emberpipe-map-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("indoor.cloud");
        let maps = two_maps();
        save_map(&maps[0], &path).unwrap();
        let back = load_map(&path).unwrap();
        assert_eq!(back.name, "indoor");
        assert_eq!(back.cloud, maps[0].cloud);
        assert_eq!(back.activation, maps[0].activation);
        std::fs::remove_dir_all(&dir).ok();
    }
}
