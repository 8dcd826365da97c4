use crate::filter::{Detection, DetectionKind};
use crate::geometry::{mean_and_normal, PinholeCamera, PointCloud, Pose, UnitVec3, Vec3};

use super::ThermalContour;

/// Pose of the thermal camera's optical frame in the LiDAR frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub camera_in_lidar: Pose,
}

#[derive(Debug, thiserror::Error)]
pub enum LocalizeError {
    #[error("insufficient support: {0} LiDAR points project into the bounding box")]
    InsufficientSupport(usize),
    #[error("bounding box too narrow: {0} px")]
    OutOfRange(u32),
    #[error("degenerate point configuration")]
    Degenerate,
}

/// Monotone pixel-size → distance correction, piecewise linear between
/// (raw, corrected) knots. Empty table is the identity.
#[derive(Debug, Clone, Default, serde::Serialize, serde::Deserialize)]
pub struct CalibMap {
    pub knots: Vec<(f64, f64)>,
}

impl CalibMap {
    pub fn identity() -> Self {
        Self { knots: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), String> {
        for w in self.knots.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err("calibration knots must be strictly increasing".into());
            }
        }
        Ok(())
    }

    pub fn apply(&self, raw: f64) -> f64 {
        if self.knots.is_empty() {
            return raw;
        }
        if self.knots.len() == 1 {
            return raw + (self.knots[0].1 - self.knots[0].0);
        }
        // Clamp-slope extrapolation at both ends.
        let seg = match self
            .knots
            .windows(2)
            .position(|w| raw <= w[1].0)
        {
            Some(i) => i,
            None => self.knots.len() - 2,
        };
        let (x0, y0) = self.knots[seg];
        let (x1, y1) = self.knots[seg + 1];
        y0 + (raw - x0) * (y1 - y0) / (x1 - x0)
    }
}

/// Heat-source localization by LiDAR projection: every cloud point that
/// projects into the contour's bounding box feeds a mean-and-normal
/// estimate. The cloud is in the LiDAR frame; the result is expressed in
/// the frame `lidar_pose` maps into.
pub fn localize_heat_lidar(
    contour: &ThermalContour,
    cloud: &PointCloud,
    extrinsics: &Extrinsics,
    camera: &PinholeCamera,
    lidar_pose: &Pose,
) -> Result<Detection, LocalizeError> {
    let lidar_in_camera = extrinsics.camera_in_lidar.inverse();
    let (u0, v0, u1, v1) = contour.bbox;
    let mut support = Vec::new();
    for p in &cloud.points {
        let p_cam = lidar_in_camera.apply(p);
        if let Some((u, v)) = camera.project(&p_cam) {
            let (pu, pv) = (u.floor(), v.floor());
            if pu >= u0 as f64 && pu <= u1 as f64 && pv >= v0 as f64 && pv <= v1 as f64 {
                support.push(*p);
            }
        }
    }
    if support.len() < 3 {
        return Err(LocalizeError::InsufficientSupport(support.len()));
    }
    // Wall rim and recessed heat plate both project into the small bounding
    // box as two parallel surfaces; a covariance over the mix has no stable
    // normal. Keep the dominant range mode (one surface).
    let support = dominant_range_mode(support);
    if support.len() < 3 {
        return Err(LocalizeError::InsufficientSupport(support.len()));
    }
    let sensor = Vec3::zeros(); // LiDAR origin in its own frame
    let (mean, normal) =
        mean_and_normal(&support, Some(&sensor)).map_err(|_| LocalizeError::Degenerate)?;
    Ok(Detection {
        position: lidar_pose.apply(&mean),
        normal: UnitVec3::new_normalize(lidar_pose.rotate(&normal)),
        kind: DetectionKind::Thermal,
        timestamp: contour.timestamp,
    })
}

/// Keep the points within a narrow range window around the median range:
/// the majority surface wins, parallel surfaces a recess apart and
/// shoot-through outliers fall away.
fn dominant_range_mode(mut points: Vec<Vec3>) -> Vec<Vec3> {
    const HALF_WINDOW: f64 = 0.06;
    points.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    let median = points[points.len() / 2].norm();
    let kept: Vec<Vec3> = points
        .iter()
        .copied()
        .filter(|p| (p.norm() - median).abs() <= HALF_WINDOW)
        .collect();
    if kept.len() >= 3 {
        kept
    } else {
        points
    }
}

/// Heat-source localization from the apparent size of a known-size element:
/// `distance = fx · element_size / bbox_width_px`, corrected through the
/// calibration map, with the contour center back-projected at that depth.
/// The detection is expressed in the camera frame (normal faces the camera).
pub fn estimate_distance_bbox(
    contour: &ThermalContour,
    camera: &PinholeCamera,
    element_size: f64,
    calib: &CalibMap,
) -> Result<(f64, Detection), LocalizeError> {
    let width_px = contour.bbox_width_px();
    if width_px < 2 {
        return Err(LocalizeError::OutOfRange(width_px));
    }
    let raw = camera.fx * element_size / width_px as f64;
    let distance = calib.apply(raw);
    let (cu, cv) = contour.center_of_intensity;
    let position = camera.unproject(cu, cv, distance);
    let normal = UnitVec3::new_normalize(-position);
    Ok((
        distance,
        Detection {
            position,
            normal,
            kind: DetectionKind::Thermal,
            timestamp: contour.timestamp,
        },
    ))
}
