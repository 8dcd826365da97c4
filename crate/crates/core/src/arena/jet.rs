use crate::geometry::{Pose, Vec3};

use super::ArenaModel;

/// Ballistic water-jet model. The jet exits along the nozzle pose's +X axis
/// at `exit_speed` and follows `x(t) = p0 + v0·t − ½g t² ẑ`.
#[derive(Debug, Clone)]
pub struct JetModel {
    pub exit_speed: f64,
    pub exit_pose: Pose,
    pub flow_rate: f64,
    pub gravity: f64,
}

impl JetModel {
    pub fn new(exit_speed: f64, exit_pose: Pose) -> Self {
        Self {
            exit_speed,
            exit_pose,
            flow_rate: 0.1,
            gravity: 9.81,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JetResult {
    pub hit_point: Option<Vec3>,
    pub hole_hit: Option<usize>,
    /// `flow_rate × duration` when the arc passes through a hole aperture,
    /// else zero.
    pub water_delivered: f64,
}

/// First intersection of the ballistic arc with the arena. Water is
/// credited to a hole iff the arc crosses its aperture disk.
pub fn simulate_jet(jet: &JetModel, arena: &ArenaModel, duration: f64) -> JetResult {
    assert!(duration >= 0.0, "duration must be >= 0");
    let p0 = jet.exit_pose.translation;
    let v0 = jet.exit_pose.rotate(&Vec3::x()) * jet.exit_speed;
    let g = jet.gravity;

    // Earliest plane crossing among wall facets (aperture decides between a
    // wall splash and a hole credit) and the floor.
    let mut best: Option<(f64, Option<usize>)> = None;
    let mut consider = |t: f64, hole: Option<usize>| {
        if best.map_or(true, |(bt, _)| t < bt) {
            best = Some((t, hole));
        }
    };

    for wall in &arena.walls {
        let n = wall.normal().into_inner();
        // n·p(t) = n·corner, quadratic in t.
        let a = -0.5 * g * n.z;
        let b = n.dot(&v0);
        let c = n.dot(&(p0 - wall.corner));
        for t in quadratic_roots(a, b, c) {
            if t <= 1e-9 {
                continue;
            }
            let hit = arc_point(p0, v0, g, t);
            let rel = hit - wall.corner;
            let ua = rel.dot(&wall.edge_u) / wall.edge_u.norm_squared();
            let va = rel.dot(&wall.edge_v) / wall.edge_v.norm_squared();
            if !(0.0..=1.0).contains(&ua) || !(0.0..=1.0).contains(&va) {
                continue;
            }
            let hole = arena
                .holes
                .iter()
                .position(|h| {
                    h.normal.dot(&(hit - h.center)).abs() < 1e-6
                        && (hit - h.center).norm() <= h.radius()
                });
            consider(t, hole);
            break; // roots come back ascending; only the first crossing counts
        }
    }

    // Floor plane z = floor_z.
    let a = -0.5 * g;
    let b = v0.z;
    let c = p0.z - arena.floor_z;
    for t in quadratic_roots(a, b, c) {
        if t > 1e-9 {
            consider(t, None);
            break;
        }
    }

    match best {
        Some((t, hole)) => JetResult {
            hit_point: Some(arc_point(p0, v0, g, t)),
            hole_hit: hole,
            water_delivered: if hole.is_some() {
                jet.flow_rate * duration
            } else {
                0.0
            },
        },
        None => JetResult {
            hit_point: None,
            hole_hit: None,
            water_delivered: 0.0,
        },
    }
}

fn arc_point(p0: Vec3, v0: Vec3, g: f64, t: f64) -> Vec3 {
    p0 + v0 * t - Vec3::new(0.0, 0.0, 0.5 * g * t * t)
}

/// Real roots in ascending order.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a.abs() < 1e-15 {
        if b.abs() < 1e-15 {
            return Vec::new();
        }
        return vec![-c / b];
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let sq = disc.sqrt();
    let mut roots = vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)];
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Exit speed for a level nozzle whose arc must drop `drop` meters over a
/// horizontal distance `dist` under gravity `g`.
pub fn level_exit_speed(dist: f64, drop: f64, g: f64) -> f64 {
    dist * (g / (2.0 * drop)).sqrt()
}
