use std::collections::HashMap;

use nalgebra::{Matrix6, UnitQuaternion, Vector6};

use crate::geometry::{least_squares_plane, PointCloud, Pose, Vec3};

/// Reference cloud prepared for point-to-plane ICP: voxel-hashed points
/// with per-point normals from local plane fits.
#[derive(Debug, Clone)]
pub struct PreparedMap {
    points: Vec<Vec3>,
    normals: Vec<Option<Vec3>>,
    cells: HashMap<(i32, i32, i32), Vec<u32>>,
    cell_size: f64,
}

const NORMAL_RADIUS: f64 = 0.15;
const NORMAL_MIN_NEIGHBORS: usize = 5;

impl PreparedMap {
    pub fn build(cloud: &PointCloud, cell_size: f64) -> PreparedMap {
        let mut cells: HashMap<(i32, i32, i32), Vec<u32>> = HashMap::new();
        for (i, p) in cloud.points.iter().enumerate() {
            cells.entry(cell_of(p, cell_size)).or_default().push(i as u32);
        }
        let mut map = PreparedMap {
            points: cloud.points.clone(),
            normals: vec![None; cloud.points.len()],
            cells,
            cell_size,
        };
        let mut neighbors = Vec::new();
        for i in 0..map.points.len() {
            neighbors.clear();
            let p = map.points[i];
            map.for_each_near(&p, NORMAL_RADIUS, |j, q| {
                let _ = j;
                neighbors.push(q);
            });
            if neighbors.len() >= NORMAL_MIN_NEIGHBORS {
                if let Ok((_, n)) = least_squares_plane(&neighbors) {
                    map.normals[i] = Some(n.into_inner());
                }
            }
        }
        map
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn for_each_near(&self, p: &Vec3, radius: f64, mut f: impl FnMut(usize, Vec3)) {
        let reach = (radius / self.cell_size).ceil() as i32;
        let (cx, cy, cz) = cell_of(p, self.cell_size);
        let r2 = radius * radius;
        for dz in -reach..=reach {
            for dy in -reach..=reach {
                for dx in -reach..=reach {
                    if let Some(idx) = self.cells.get(&(cx + dx, cy + dy, cz + dz)) {
                        for &i in idx {
                            let q = self.points[i as usize];
                            if (q - p).norm_squared() <= r2 {
                                f(i as usize, q);
                            }
                        }
                    }
                }
            }
        }
    }

    /// Nearest map point with a valid normal within `radius`.
    fn nearest_with_normal(&self, p: &Vec3, radius: f64) -> Option<(Vec3, Vec3)> {
        let mut best: Option<(f64, usize)> = None;
        self.for_each_near(p, radius, |i, q| {
            if self.normals[i].is_none() {
                return;
            }
            let d2 = (q - p).norm_squared();
            if best.map_or(true, |(bd, _)| d2 < bd) {
                best = Some((d2, i));
            }
        });
        best.map(|(_, i)| (self.points[i], self.normals[i].unwrap()))
    }
}

fn cell_of(p: &Vec3, cell: f64) -> (i32, i32, i32) {
    (
        (p.x / cell).floor() as i32,
        (p.y / cell).floor() as i32,
        (p.z / cell).floor() as i32,
    )
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationParams {
    pub max_iterations: usize,
    /// Correspondence gate, annealed linearly from start to end.
    pub gate_start: f64,
    pub gate_end: f64,
    pub min_inlier_fraction: f64,
    pub max_rms: f64,
    /// Registration runs on every n-th scan point.
    pub scan_stride: usize,
}

impl Default for RegistrationParams {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            gate_start: 0.5,
            gate_end: 0.1,
            min_inlier_fraction: 0.4,
            max_rms: 0.15,
            scan_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Registration {
    pub pose: Pose,
    pub rms: f64,
    pub inlier_fraction: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistrationError {
    #[error("empty scan")]
    EmptyScan,
    #[error("registration failed: rms {rms:.3} m, inlier fraction {inlier_fraction:.2}")]
    Failed { rms: f64, inlier_fraction: f64 },
}

/// Point-to-plane ICP of a scan (sensor frame) against the prepared map,
/// starting from `initial`. Deterministic for fixed inputs.
pub fn register_scan(
    scan: &PointCloud,
    map: &PreparedMap,
    initial: &Pose,
    params: &RegistrationParams,
) -> Result<Registration, RegistrationError> {
    if scan.is_empty() {
        return Err(RegistrationError::EmptyScan);
    }
    let stride = params.scan_stride.max(1);
    let points: Vec<Vec3> = scan.points.iter().step_by(stride).copied().collect();
    let mut pose = *initial;

    for iter in 0..params.max_iterations {
        let frac = if params.max_iterations > 1 {
            iter as f64 / (params.max_iterations - 1) as f64
        } else {
            1.0
        };
        let gate = params.gate_start + (params.gate_end - params.gate_start) * frac;
        let mut h = Matrix6::<f64>::zeros();
        let mut g = Vector6::<f64>::zeros();
        let mut matched = 0usize;
        for p in &points {
            let world = pose.apply(p);
            let Some((q, n)) = map.nearest_with_normal(&world, gate) else {
                continue;
            };
            let r = n.dot(&(world - q));
            let c = world.cross(&n);
            let j = Vector6::new(n.x, n.y, n.z, c.x, c.y, c.z);
            h += j * j.transpose();
            g += j * r;
            matched += 1;
        }
        if matched < 6 {
            break;
        }
        // Tiny damping keeps the solve well-posed on degenerate geometry.
        for k in 0..6 {
            h[(k, k)] += 1e-9;
        }
        let Some(chol) = h.cholesky() else {
            break;
        };
        let delta = chol.solve(&(-g));
        let dv = Vec3::new(delta[0], delta[1], delta[2]);
        let dw = Vec3::new(delta[3], delta[4], delta[5]);
        let step = Pose {
            translation: dv,
            rotation: UnitQuaternion::from_scaled_axis(dw),
        };
        pose = step.compose(&pose);
        if delta.norm() < 1e-12 {
            break;
        }
    }

    // Fit statistics on the final gate.
    let gate = params.gate_end;
    let mut matched = 0usize;
    let mut sq = 0.0;
    for p in &points {
        let world = pose.apply(p);
        if let Some((q, n)) = map.nearest_with_normal(&world, gate) {
            let r = n.dot(&(world - q));
            sq += r * r;
            matched += 1;
        }
    }
    let inlier_fraction = matched as f64 / points.len() as f64;
    let rms = if matched > 0 {
        (sq / matched as f64).sqrt()
    } else {
        f64::INFINITY
    };
    if inlier_fraction < params.min_inlier_fraction || rms > params.max_rms {
        return Err(RegistrationError::Failed {
            rms,
            inlier_fraction,
        });
    }
    Ok(Registration {
        pose,
        rms,
        inlier_fraction,
    })
}
