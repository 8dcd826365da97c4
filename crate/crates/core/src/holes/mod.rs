//! Detection of circular wall openings in LiDAR point clouds: RANSAC plane
//! extraction, orthographic plane rasterization, morphological gap closing,
//! and Hough circle detection, with re-projection into 3D and a diameter
//! gate.

mod circles;
mod morph;
mod raster;

pub use circles::{boundary_pixels, detect_circles, score_circle, CircleHit};
pub use morph::close_gaps;
pub use raster::{plane_basis, rasterize_plane, RasterPlaneImage};

use crate::filter::{Detection, DetectionKind};
use crate::geometry::{
    fit_planes_ransac, least_squares_plane, PlaneModel, PointCloud, Pose, RansacParams, UnitVec3,
};

/// A detected circular opening.
#[derive(Debug, Clone)]
pub struct HoleDetection {
    /// Hole center on the supporting plane.
    pub position: crate::geometry::Vec3,
    /// Supporting plane normal, oriented toward the sensor.
    pub normal: UnitVec3,
    pub diameter: f64,
    pub score: f64,
    pub support_plane: PlaneModel,
    pub timestamp: f64,
}

impl HoleDetection {
    pub fn to_detection(&self) -> Detection {
        Detection {
            position: self.position,
            normal: self.normal,
            kind: DetectionKind::Hole,
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HoleParams {
    pub ransac: RansacParams,
    /// Hypothesis search runs on every n-th point; inliers are re-gathered
    /// from the full cloud. 1 disables subsampling.
    pub ransac_subsample: usize,
    pub seed: u64,
    /// Orthographic raster resolution (m/px). Range-independent.
    pub raster_resolution: f64,
    pub closing_radius_px: usize,
    pub min_diameter: f64,
    pub max_diameter: f64,
    pub circle_score_threshold: f64,
    /// Planes whose inlier centroid lies beyond this range are skipped and
    /// inliers beyond it are not rasterized; hole detection is only
    /// reliable at close range.
    pub max_plane_range: Option<f64>,
    /// Planes more horizontal than this |normal.z| are skipped: target
    /// holes are wall openings.
    pub max_normal_z: f64,
}

impl Default for HoleParams {
    fn default() -> Self {
        Self {
            ransac: RansacParams::default(),
            ransac_subsample: 1,
            seed: 0,
            raster_resolution: 0.01,
            closing_radius_px: 3,
            min_diameter: 0.10,
            max_diameter: 0.20,
            circle_score_threshold: 0.6,
            max_plane_range: None,
            max_normal_z: 0.8,
        }
    }
}

/// Full pipeline over one scan (cloud in the sensor frame). Detections come
/// back in the same frame as `sensor_pose` maps into, sorted by score
/// descending; an empty list is not an error.
pub fn detect_holes(
    cloud: &PointCloud,
    sensor_pose: &Pose,
    params: &HoleParams,
    timestamp: f64,
) -> Vec<HoleDetection> {
    let mut detections = Vec::new();
    if cloud.is_empty() {
        return detections;
    }
    let stride = params.ransac_subsample.max(1);
    let search_cloud = if stride > 1 {
        cloud.subsample(stride)
    } else {
        cloud.clone()
    };
    let mut search_params = params.ransac.clone();
    search_params.min_inliers = (params.ransac.min_inliers / stride).max(3);
    let coarse = fit_planes_ransac(&search_cloud, &search_params, params.seed);

    // The sensor sits at the cloud-frame origin.
    let sensor_in_cloud = crate::geometry::Vec3::zeros();

    for coarse_plane in coarse {
        // Re-gather inliers from the full cloud and refit.
        let full_inliers: Vec<usize> = (0..cloud.points.len())
            .filter(|&i| coarse_plane.distance(&cloud.points[i]) <= params.ransac.dist_threshold)
            .collect();
        if full_inliers.len() < params.ransac.min_inliers {
            continue;
        }
        let pts: Vec<_> = full_inliers.iter().map(|&i| cloud.points[i]).collect();
        let Ok((mean, normal)) = least_squares_plane(&pts) else {
            continue;
        };
        let offset = normal.dot(&mean);
        let refined = PlaneModel {
            normal,
            offset,
            inlier_indices: (0..cloud.points.len())
                .filter(|&i| {
                    (normal.dot(&cloud.points[i]) - offset).abs() <= params.ransac.dist_threshold
                })
                .collect(),
        };
        if refined.inlier_indices.len() < params.ransac.min_inliers {
            continue;
        }
        let mut plane = refined.oriented_towards(&sensor_in_cloud);
        if plane.normal.z.abs() > params.max_normal_z {
            continue;
        }
        if let Some(max_range) = params.max_plane_range {
            let centroid: crate::geometry::Vec3 = plane
                .inlier_indices
                .iter()
                .map(|&i| cloud.points[i])
                .sum::<crate::geometry::Vec3>()
                / plane.inlier_indices.len() as f64;
            if centroid.norm() > max_range {
                continue;
            }
            // Grazing-angle returns far along the plane only bloat the
            // raster; keep the close-range region.
            plane
                .inlier_indices
                .retain(|&i| cloud.points[i].norm() <= max_range);
            if plane.inlier_indices.len() < params.ransac.min_inliers {
                continue;
            }
        }

        let Ok(raster) = rasterize_plane(&plane, cloud, params.raster_resolution) else {
            continue;
        };
        let closed = close_gaps(&raster, params.closing_radius_px);
        let r_min_px =
            ((params.min_diameter / 2.0 / params.raster_resolution).floor() as usize).max(2);
        let r_max_px = (params.max_diameter / 2.0 / params.raster_resolution).ceil() as usize;
        for hit in detect_circles(&closed, r_min_px, r_max_px, params.circle_score_threshold) {
            let diameter = 2.0 * hit.radius_px * params.raster_resolution;
            if diameter < params.min_diameter || diameter > params.max_diameter {
                continue;
            }
            let center_cloud = closed.pixel_to_world(hit.center.0, hit.center.1);
            detections.push(HoleDetection {
                position: sensor_pose.apply(&center_cloud),
                normal: UnitVec3::new_normalize(sensor_pose.rotate(&plane.normal)),
                diameter,
                score: hit.score,
                support_plane: plane.clone(),
                timestamp,
            });
        }
    }

    detections.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.position.x.total_cmp(&b.position.x))
            .then(a.position.y.total_cmp(&b.position.y))
    });
    detections
}
