//! Synthetic world: walls, holes, heat sources, robot kinematics, GNSS
//! drift, LiDAR/thermal rendering, and water-jet ballistics. Rendering is
//! pure in (arena, pose, seed), which makes it the ground-truth oracle for
//! every perception test.

mod dynamics;
mod gnss;
mod jet;
mod lidar;
mod thermal;

pub use dynamics::{step_dynamics, Command, MotionLimits};
pub use gnss::{gnss_measure, DriftModel, DriftState, StepInjection};
pub use jet::{level_exit_speed, simulate_jet, JetModel, JetResult};
pub use lidar::{render_lidar, LidarConfig};
pub use thermal::render_thermal;

use crate::geometry::{Pose, UnitVec3, Vec3};

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Box grown by `margin` on every side (negative shrinks).
    pub fn inflated(&self, margin: f64) -> Aabb {
        let m = Vec3::new(margin, margin, margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn clamp(&self, p: &Vec3) -> Vec3 {
        Vec3::new(
            p.x.clamp(self.min.x, self.max.x),
            p.y.clamp(self.min.y, self.max.y),
            p.z.clamp(self.min.z, self.max.z),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Solid,
    /// Transparent to the LiDAR beam; blocks water.
    Acrylic,
}

/// Rectangular wall facet: `corner + a·edge_u + b·edge_v` for a, b ∈ [0, 1].
#[derive(Debug, Clone)]
pub struct WallFacet {
    pub corner: Vec3,
    pub edge_u: Vec3,
    pub edge_v: Vec3,
    pub material: Material,
}

impl WallFacet {
    pub fn normal(&self) -> UnitVec3 {
        UnitVec3::new_normalize(self.edge_u.cross(&self.edge_v))
    }

    /// Ray-facet intersection: distance along `dir` (unit) from `origin`,
    /// or None when the ray misses the rectangle.
    pub fn raycast(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let n = self.normal().into_inner();
        let denom = n.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = n.dot(&(self.corner - origin)) / denom;
        if t <= 1e-9 {
            return None;
        }
        let hit = origin + dir * t;
        let rel = hit - self.corner;
        let uu = self.edge_u.norm_squared();
        let vv = self.edge_v.norm_squared();
        let a = rel.dot(&self.edge_u) / uu;
        let b = rel.dot(&self.edge_v) / vv;
        if (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b) {
            Some(t)
        } else {
            None
        }
    }

    pub fn contains_on_plane(&self, p: &Vec3, tol: f64) -> bool {
        let n = self.normal();
        if n.dot(&(p - self.corner)).abs() > tol {
            return false;
        }
        let rel = p - self.corner;
        let a = rel.dot(&self.edge_u) / self.edge_u.norm_squared();
        let b = rel.dot(&self.edge_v) / self.edge_v.norm_squared();
        (0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Enclosure {
    None,
    Acrylic,
}

/// A circular opening in a wall with a heating plate recessed behind it.
#[derive(Debug, Clone)]
pub struct Hole {
    pub center: Vec3,
    pub normal: UnitVec3,
    pub diameter: f64,
    pub recess_depth: f64,
    pub heated: bool,
    pub heat_temp: f64,
    pub enclosure: Enclosure,
}

impl Hole {
    pub fn radius(&self) -> f64 {
        self.diameter * 0.5
    }

    /// Center of the recessed heating plate.
    pub fn plate_center(&self) -> Vec3 {
        self.center - self.normal.into_inner() * self.recess_depth
    }

    /// Distance along the ray at which it crosses the hole's aperture disk,
    /// or None.
    pub fn aperture_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        disk_hit(&self.center, &self.normal, self.radius(), origin, dir)
    }

    /// Distance along the ray at which it hits the recessed plate disk
    /// after passing through the aperture, or None.
    pub fn plate_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        self.aperture_hit(origin, dir)?;
        disk_hit(&self.plate_center(), &self.normal, self.radius(), origin, dir)
    }
}

pub(crate) fn disk_hit(
    center: &Vec3,
    normal: &UnitVec3,
    radius: f64,
    origin: &Vec3,
    dir: &Vec3,
) -> Option<f64> {
    let denom = normal.dot(dir);
    if denom.abs() < 1e-12 {
        return None;
    }
    let t = normal.dot(&(center - origin)) / denom;
    if t <= 1e-9 {
        return None;
    }
    let hit = origin + dir * t;
    if (hit - center).norm() <= radius {
        Some(t)
    } else {
        None
    }
}

/// World geometry plus the radiometric levels used by the thermal renderer
/// (arbitrary intensity units; detector thresholds are scenario config).
#[derive(Debug, Clone)]
pub struct ArenaModel {
    pub walls: Vec<WallFacet>,
    pub holes: Vec<Hole>,
    pub floor_z: f64,
    pub bounds: Aabb,
    pub ambient_level: f64,
    pub thermal_noise_sigma: f64,
}

impl ArenaModel {
    /// Index of the wall the hole sits on, or None. Every valid hole lies on
    /// exactly one facet within 1 mm.
    pub fn wall_of_hole(&self, hole: &Hole) -> Option<usize> {
        self.walls
            .iter()
            .position(|w| w.contains_on_plane(&hole.center, 1e-3))
    }

    pub fn validate(&self) -> Result<(), String> {
        for (i, h) in self.holes.iter().enumerate() {
            let count = self
                .walls
                .iter()
                .filter(|w| w.contains_on_plane(&h.center, 1e-3))
                .count();
            if count != 1 {
                return Err(format!(
                    "hole {i} lies on {count} wall facets (expected exactly 1)"
                ));
            }
            if h.diameter <= 0.0 || h.recess_depth < 0.0 {
                return Err(format!("hole {i} has invalid dimensions"));
            }
            if let Some(w) = self.wall_of_hole(h) {
                let acrylic_wall = self.walls[w].material == Material::Acrylic;
                let acrylic_hole = h.enclosure == Enclosure::Acrylic;
                if acrylic_wall != acrylic_hole {
                    return Err(format!(
                        "hole {i} enclosure does not match its wall material"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Nearest surface along a ray. Rays that cross a hole aperture pass
    /// through the wall and may return the recessed plate; acrylic facets
    /// never return.
    pub fn raycast(&self, origin: &Vec3, dir: &Vec3) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        let mut consider = |t: f64, s: Surface| {
            if best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, s));
            }
        };
        for (wi, wall) in self.walls.iter().enumerate() {
            if wall.material == Material::Acrylic {
                continue;
            }
            if let Some(t) = wall.raycast(origin, dir) {
                let hit = origin + dir * t;
                let through_hole = self.holes.iter().any(|h| {
                    h.normal.dot(&(hit - h.center)).abs() < 1e-6
                        && (hit - h.center).norm() <= h.radius()
                });
                if !through_hole {
                    consider(t, Surface::Wall(wi));
                }
            }
        }
        for (hi, hole) in self.holes.iter().enumerate() {
            if let Some(t) = hole.plate_hit(origin, dir) {
                consider(t, Surface::Plate(hi));
            }
        }
        best
    }

    /// Bounding box of the vertical wall geometry (floor facets excluded),
    /// used for near-building and route-clearance checks.
    pub fn building_hull(&self) -> Option<Aabb> {
        let mut min = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut max = -min;
        let mut any = false;
        for w in &self.walls {
            if w.normal().z.abs() > 0.5 {
                continue;
            }
            for corner in [
                w.corner,
                w.corner + w.edge_u,
                w.corner + w.edge_v,
                w.corner + w.edge_u + w.edge_v,
            ] {
                min = min.inf(&corner);
                max = max.sup(&corner);
                any = true;
            }
        }
        any.then_some(Aabb { min, max })
    }
}

/// What a ray hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Wall(usize),
    Plate(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotKind {
    Uav,
    Ugv,
}

/// Ground-truth simulated robot.
#[derive(Debug, Clone)]
pub struct RobotState {
    pub true_pose: Pose,
    pub velocity: Vec3,
    pub yaw_rate: f64,
    pub kind: RobotKind,
    pub water_remaining: f64,
    pub pump_on: bool,
    /// Nozzle pose relative to the base (UGV arm only).
    pub arm_pose: Option<Pose>,
}

impl RobotState {
    pub fn new(kind: RobotKind, spawn: Pose, water: f64) -> Self {
        Self {
            true_pose: spawn,
            velocity: Vec3::zeros(),
            yaw_rate: 0.0,
            kind,
            water_remaining: water,
            pump_on: false,
            arm_pose: matches!(kind, RobotKind::Ugv).then(Pose::identity),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn facet_raycast_hits_inside_rectangle() {
        let wall = WallFacet {
            corner: Vec3::new(2.0, -1.0, 0.0),
            edge_u: Vec3::new(0.0, 2.0, 0.0),
            edge_v: Vec3::new(0.0, 0.0, 2.0),
            material: Material::Solid,
        };
        let t = wall
            .raycast(&Vec3::new(0.0, 0.0, 1.0), &Vec3::x())
            .unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!(wall
            .raycast(&Vec3::new(0.0, 5.0, 1.0), &Vec3::x())
            .is_none());
    }

    #[test]
    fn hole_must_sit_on_exactly_one_wall() {
        let wall = WallFacet {
            corner: Vec3::new(2.0, -1.0, 0.0),
            edge_u: Vec3::new(0.0, 2.0, 0.0),
            edge_v: Vec3::new(0.0, 0.0, 2.0),
            material: Material::Solid,
        };
        let hole = Hole {
            center: Vec3::new(2.0, 0.0, 1.0),
            normal: UnitVec3::new_normalize(-Vec3::x()),
            diameter: 0.15,
            recess_depth: 0.10,
            heated: true,
            heat_temp: 600.0,
            enclosure: Enclosure::None,
        };
        let arena = ArenaModel {
            walls: vec![wall],
            holes: vec![hole],
            floor_z: 0.0,
            bounds: Aabb::new(Vec3::new(-5.0, -5.0, 0.0), Vec3::new(5.0, 5.0, 5.0)),
            ambient_level: 300.0,
            thermal_noise_sigma: 0.0,
        };
        arena.validate().unwrap();
        let mut off = arena.clone();
        off.holes[0].center.x += 0.5;
        assert!(off.validate().is_err());
    }

    #[test]
    fn plate_hit_respects_visibility_cone() {
        let hole = Hole {
            center: Vec3::new(2.0, 0.0, 1.0),
            normal: UnitVec3::new_normalize(-Vec3::x()),
            diameter: 0.15,
            recess_depth: 0.10,
            heated: true,
            heat_temp: 600.0,
            enclosure: Enclosure::Acrylic,
        };
        // Frontal ray reaches the plate 0.10 m behind the aperture.
        let t = hole
            .plate_hit(&Vec3::new(0.0, 0.0, 1.0), &Vec3::x())
            .unwrap();
        assert!((t - 2.10).abs() < 1e-9);
        // A 60°-oblique ray through the aperture misses the recessed plate.
        let origin = Vec3::new(2.0 - 1.0, -(60f64).to_radians().tan(), 1.0);
        let dir = (hole.center - origin).normalize();
        assert!(hole.aperture_hit(&origin, &dir).is_some());
        assert!(hole.plate_hit(&origin, &dir).is_none());
    }
}
