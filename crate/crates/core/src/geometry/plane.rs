use nalgebra::Matrix3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GeometryError, PointCloud, UnitVec3, Vec3};

/// Plane `{x : n·x = d}` with the indices of its supporting points.
#[derive(Debug, Clone)]
pub struct PlaneModel {
    pub normal: UnitVec3,
    pub offset: f64,
    pub inlier_indices: Vec<usize>,
}

impl PlaneModel {
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) - self.offset
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.signed_distance(p).abs()
    }

    /// Flip the normal so it faces `observer` (seen from the plane).
    pub fn oriented_towards(&self, observer: &Vec3) -> PlaneModel {
        if self.signed_distance(observer) < 0.0 {
            PlaneModel {
                normal: UnitVec3::new_unchecked(-self.normal.into_inner()),
                offset: -self.offset,
                inlier_indices: self.inlier_indices.clone(),
            }
        } else {
            self.clone()
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacParams {
    pub max_planes: usize,
    pub dist_threshold: f64,
    pub min_inliers: usize,
    pub iterations: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            max_planes: 4,
            dist_threshold: 0.03,
            min_inliers: 150,
            iterations: 400,
        }
    }
}

/// Sequential RANSAC plane extraction: 3-point hypotheses, inlier-count
/// scoring with RMS tie-breaking, least-squares refinement, and removal of
/// each plane's inliers before fitting the next. Deterministic for a fixed
/// seed; planes come back in decreasing inlier count.
pub fn fit_planes_ransac(cloud: &PointCloud, params: &RansacParams, seed: u64) -> Vec<PlaneModel> {
    assert!(params.dist_threshold > 0.0, "dist_threshold must be > 0");
    assert!(params.iterations >= 1, "iterations must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = &cloud.points;
    let mut alive: Vec<usize> = (0..points.len()).collect();
    let mut planes: Vec<PlaneModel> = Vec::new();

    while planes.len() < params.max_planes && alive.len() >= params.min_inliers.max(3) {
        let mut best: Option<(f64, f64, Vec3, usize, f64)> = None; // (n·x=d) as (d, _, n, count, rms)
        for _ in 0..params.iterations {
            let (a, b, c) = sample_triplet(&mut rng, &alive);
            let pa = points[a];
            let n = (points[b] - pa).cross(&(points[c] - pa));
            let norm = n.norm();
            if norm < 1e-12 {
                continue;
            }
            let n = n / norm;
            let d = n.dot(&pa);
            let mut count = 0usize;
            let mut sq = 0.0;
            for &i in &alive {
                let r = n.dot(&points[i]) - d;
                if r.abs() <= params.dist_threshold {
                    count += 1;
                    sq += r * r;
                }
            }
            if count < 3 {
                continue;
            }
            let rms = (sq / count as f64).sqrt();
            let better = match &best {
                None => true,
                Some((_, _, _, bc, brms)) => count > *bc || (count == *bc && rms < *brms),
            };
            if better {
                best = Some((d, 0.0, n, count, rms));
            }
        }
        let Some((d, _, n, count, _)) = best else {
            break;
        };
        if count < params.min_inliers {
            break;
        }

        // Least-squares refit on the hypothesis inliers, then re-gather so
        // every reported inlier satisfies the threshold against the final
        // plane exactly.
        let hyp_inliers: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&i| (n.dot(&points[i]) - d).abs() <= params.dist_threshold)
            .collect();
        let hyp_points: Vec<Vec3> = hyp_inliers.iter().map(|&i| points[i]).collect();
        let (normal, offset) = match least_squares_plane(&hyp_points) {
            Ok((m, nrm)) => (nrm, nrm.dot(&m)),
            Err(_) => (UnitVec3::new_normalize(n), d),
        };
        let refined: Vec<usize> = alive
            .iter()
            .copied()
            .filter(|&i| (normal.dot(&points[i]) - offset).abs() <= params.dist_threshold)
            .collect();
        let (normal, offset, inliers) = if refined.len() >= hyp_inliers.len() {
            (normal, offset, refined)
        } else {
            (UnitVec3::new_normalize(n), d, hyp_inliers)
        };
        if inliers.len() < params.min_inliers {
            break;
        }
        let taken: std::collections::HashSet<usize> = inliers.iter().copied().collect();
        alive.retain(|i| !taken.contains(i));
        planes.push(PlaneModel {
            normal,
            offset,
            inlier_indices: inliers,
        });
    }

    planes.sort_by(|a, b| b.inlier_indices.len().cmp(&a.inlier_indices.len()));
    planes
}

fn sample_triplet(rng: &mut ChaCha8Rng, alive: &[usize]) -> (usize, usize, usize) {
    let n = alive.len();
    let a = rng.gen_range(0..n);
    let b = loop {
        let b = rng.gen_range(0..n);
        if b != a {
            break b;
        }
    };
    let c = loop {
        let c = rng.gen_range(0..n);
        if c != a && c != b {
            break c;
        }
    };
    (alive[a], alive[b], alive[c])
}

/// Mean position and plane normal from the sample covariance: the normal is
/// the unit eigenvector of the smallest eigenvalue. When `sensor` is given
/// the normal is flipped to face it.
pub fn mean_and_normal(
    points: &[Vec3],
    sensor: Option<&Vec3>,
) -> Result<(Vec3, UnitVec3), GeometryError> {
    let (mean, normal) = least_squares_plane(points)?;
    let normal = match sensor {
        Some(s) if normal.dot(&(s - mean)) < 0.0 => UnitVec3::new_unchecked(-normal.into_inner()),
        _ => normal,
    };
    Ok((mean, normal))
}

/// Centroid + smallest-eigenvalue covariance normal. Errors on fewer than 3
/// points or a collinear set.
pub fn least_squares_plane(points: &[Vec3]) -> Result<(Vec3, UnitVec3), GeometryError> {
    if points.len() < 3 {
        return Err(GeometryError::Degenerate("need at least 3 points"));
    }
    let n = points.len() as f64;
    let mean: Vec3 = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = nalgebra::SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let [lo, mid, hi] = order;
    // Collinear (or coincident) points leave the two smallest eigenvalues
    // at zero: the normal direction is then undefined.
    if eig.eigenvalues[mid] <= eig.eigenvalues[hi].max(1e-300) * 1e-9 {
        return Err(GeometryError::Degenerate("points are collinear"));
    }
    let _ = lo;
    let normal = UnitVec3::new_normalize(eig.eigenvectors.column(order[0]).into_owned());
    Ok((mean, normal))
}
