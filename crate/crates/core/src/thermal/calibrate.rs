use nalgebra::UnitQuaternion;

use crate::geometry::{PinholeCamera, Pose, Vec3};

use super::Extrinsics;

/// One calibration sample: a hole center measured in the LiDAR frame and
/// the matching heat-contour center of intensity in the thermal image.
#[derive(Debug, Clone, Copy)]
pub struct CalibrationObservation {
    pub point_lidar: Vec3,
    pub pixel: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct CalibrationResult {
    pub extrinsics: Extrinsics,
    /// RMS pixel reprojection error at the solution.
    pub residual_px: f64,
    /// RMS residual after each accepted iteration (non-increasing).
    pub residual_history: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum CalibrateError {
    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },
    #[error("need at least {need} distinct viewpoints, got {got}")]
    InsufficientDiversity { need: usize, got: usize },
    #[error("did not converge: residual {residual_px:.3} px")]
    NonConvergence { residual_px: f64 },
}

const MIN_OBSERVATIONS: usize = 6;
const MIN_VIEWPOINTS: usize = 3;
const MAX_ITERATIONS: usize = 120;
const CONVERGED_RESIDUAL_PX: f64 = 2.0;

/// Recover the camera-in-LiDAR pose that minimizes the mean squared pixel
/// reprojection error, by Levenberg-Marquardt over the 6-DoF pose with
/// numeric Jacobians. Steps are only accepted when they reduce the
/// residual, so the reported history is monotone non-increasing.
pub fn calibrate_extrinsics(
    observations: &[CalibrationObservation],
    camera: &PinholeCamera,
    initial: &Extrinsics,
) -> Result<CalibrationResult, CalibrateError> {
    if observations.len() < MIN_OBSERVATIONS {
        return Err(CalibrateError::TooFewObservations {
            need: MIN_OBSERVATIONS,
            got: observations.len(),
        });
    }
    let viewpoints = count_distinct_viewpoints(observations, 0.05);
    if viewpoints < MIN_VIEWPOINTS {
        return Err(CalibrateError::InsufficientDiversity {
            need: MIN_VIEWPOINTS,
            got: viewpoints,
        });
    }

    let mut pose = initial.camera_in_lidar;
    let mut cost = mean_sq_px(&pose, observations, camera);
    let mut history = vec![cost.sqrt()];
    let mut lambda = 1e-3;

    for _ in 0..MAX_ITERATIONS {
        let grad = numeric_gradient(&pose, observations, camera);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if grad_norm < 1e-14 {
            break;
        }
        let mut improved = false;
        for _ in 0..12 {
            // Damped gradient step; the damping doubles as a trust region.
            let scale = 1.0 / (lambda + grad_norm);
            let delta: Vec<f64> = grad.iter().map(|g| -g * scale).collect();
            let candidate = apply_delta(&pose, &delta);
            let c = mean_sq_px(&candidate, observations, camera);
            if c < cost {
                pose = candidate;
                cost = c;
                history.push(c.sqrt());
                lambda = (lambda / 3.0).max(1e-9);
                improved = true;
                break;
            }
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
        if !improved || cost < 1e-20 {
            break;
        }
    }

    // Gauss-Newton polish with numeric Jacobian once the damped descent is
    // near the basin; keeps the monotone-acceptance rule.
    for _ in 0..MAX_ITERATIONS {
        let Some(delta) = gauss_newton_step(&pose, observations, camera) else {
            break;
        };
        let candidate = apply_delta(&pose, &delta);
        let c = mean_sq_px(&candidate, observations, camera);
        if c < cost {
            pose = candidate;
            cost = c;
            history.push(c.sqrt());
        } else {
            break;
        }
        if delta.iter().map(|d| d * d).sum::<f64>().sqrt() < 1e-14 {
            break;
        }
    }

    let residual_px = cost.sqrt();
    if residual_px > CONVERGED_RESIDUAL_PX {
        return Err(CalibrateError::NonConvergence { residual_px });
    }
    Ok(CalibrationResult {
        extrinsics: Extrinsics {
            camera_in_lidar: pose,
        },
        residual_px,
        residual_history: history,
    })
}

fn count_distinct_viewpoints(observations: &[CalibrationObservation], min_sep: f64) -> usize {
    let mut distinct: Vec<Vec3> = Vec::new();
    for o in observations {
        if distinct.iter().all(|p| (p - o.point_lidar).norm() > min_sep) {
            distinct.push(o.point_lidar);
        }
    }
    distinct.len()
}

fn mean_sq_px(
    pose: &Pose,
    observations: &[CalibrationObservation],
    camera: &PinholeCamera,
) -> f64 {
    let lidar_in_camera = pose.inverse();
    let mut sum = 0.0;
    for o in observations {
        let p_cam = lidar_in_camera.apply(&o.point_lidar);
        match camera.project(&p_cam) {
            Some((u, v)) => {
                let du = u - o.pixel.0;
                let dv = v - o.pixel.1;
                sum += du * du + dv * dv;
            }
            None => sum += 1e12, // behind the camera: hard penalty
        }
    }
    sum / observations.len() as f64
}

/// Local 6-DoF parameterization: translation delta plus a body-frame
/// rotation twist.
fn apply_delta(pose: &Pose, delta: &[f64]) -> Pose {
    let dt = Vec3::new(delta[0], delta[1], delta[2]);
    let dw = Vec3::new(delta[3], delta[4], delta[5]);
    Pose {
        translation: pose.translation + dt,
        rotation: pose.rotation * UnitQuaternion::from_scaled_axis(dw),
    }
}

fn numeric_gradient(
    pose: &Pose,
    observations: &[CalibrationObservation],
    camera: &PinholeCamera,
) -> [f64; 6] {
    let h = 1e-7;
    let mut grad = [0.0; 6];
    for k in 0..6 {
        let mut dp = [0.0; 6];
        dp[k] = h;
        let plus = mean_sq_px(&apply_delta(pose, &dp), observations, camera);
        dp[k] = -h;
        let minus = mean_sq_px(&apply_delta(pose, &dp), observations, camera);
        grad[k] = (plus - minus) / (2.0 * h);
    }
    grad
}

fn gauss_newton_step(
    pose: &Pose,
    observations: &[CalibrationObservation],
    camera: &PinholeCamera,
) -> Option<Vec<f64>> {
    let h = 1e-6;
    let n = observations.len();
    let lidar_in_camera = pose.inverse();
    let mut residuals = Vec::with_capacity(2 * n);
    for o in observations {
        let (u, v) = camera.project(&lidar_in_camera.apply(&o.point_lidar))?;
        residuals.push(u - o.pixel.0);
        residuals.push(v - o.pixel.1);
    }
    // Numeric Jacobian, column per parameter.
    let mut jt_j = nalgebra::Matrix6::<f64>::zeros();
    let mut jt_r = nalgebra::Vector6::<f64>::zeros();
    let mut columns = Vec::with_capacity(6);
    for k in 0..6 {
        let mut dp = [0.0; 6];
        dp[k] = h;
        let p = apply_delta(pose, &dp);
        let inv = p.inverse();
        let mut col = Vec::with_capacity(2 * n);
        for o in observations {
            let (u, v) = camera.project(&inv.apply(&o.point_lidar))?;
            col.push(u - o.pixel.0);
            col.push(v - o.pixel.1);
        }
        for i in 0..2 * n {
            col[i] = (col[i] - residuals[i]) / h;
        }
        columns.push(col);
    }
    for a in 0..6 {
        for b in 0..6 {
            let mut s = 0.0;
            for i in 0..2 * n {
                s += columns[a][i] * columns[b][i];
            }
            jt_j[(a, b)] = s;
        }
        let mut s = 0.0;
        for i in 0..2 * n {
            s += columns[a][i] * residuals[i];
        }
        jt_r[a] = s;
    }
    // Tiny Levenberg damping for rank safety.
    for k in 0..6 {
        jt_j[(k, k)] *= 1.0 + 1e-9;
        jt_j[(k, k)] += 1e-12;
    }
    let delta = jt_j.cholesky()?.solve(&(-jt_r));
    Some(delta.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cam() -> PinholeCamera {
        PinholeCamera {
            fx: 115.0,
            fy: 115.0,
            cx: 80.0,
            cy: 60.0,
            width: 160,
            height: 120,
        }
    }

    fn truth() -> Pose {
        // Camera slightly offset and rotated relative to the LiDAR.
        let base = Pose::camera_in_body(0.0, Vec3::zeros()).rotation;
        let rot = UnitQuaternion::from_scaled_axis(Vec3::new(0.02, -0.015, 0.03));
        Pose::new(Vec3::new(0.05, -0.02, -0.08), base * rot)
    }

    /// Observations of points in front of the rig from several viewpoints.
    fn observations(noise_px: f64, count: usize, seed: u64) -> Vec<CalibrationObservation> {
        let t = truth();
        let inv = t.inverse();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut obs = Vec::new();
        while obs.len() < count {
            let p = Vec3::new(
                rng.gen_range(1.5..5.0),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.0..1.0),
            );
            let Some((u, v)) = cam().project(&inv.apply(&p)) else {
                continue;
            };
            if !cam().contains(u, v) {
                continue;
            }
            let du = if noise_px > 0.0 {
                rng.gen_range(-noise_px..noise_px)
            } else {
                0.0
            };
            let dv = if noise_px > 0.0 {
                rng.gen_range(-noise_px..noise_px)
            } else {
                0.0
            };
            obs.push(CalibrationObservation {
                point_lidar: p,
                pixel: (u + du, v + dv),
            });
        }
        obs
    }

    fn perturbed_initial() -> Extrinsics {
        let t = truth();
        Extrinsics {
            camera_in_lidar: Pose {
                translation: t.translation + Vec3::new(0.06, -0.05, 0.08),
                rotation: t.rotation
                    * UnitQuaternion::from_scaled_axis(Vec3::new(0.04, 0.05, -0.03)),
            },
        }
    }

    #[test]
    fn zero_noise_recovers_exactly() {
        let obs = observations(0.0, 20, 1);
        let result = calibrate_extrinsics(&obs, &cam(), &perturbed_initial()).unwrap();
        let t = truth();
        let terr = (result.extrinsics.camera_in_lidar.translation - t.translation).norm();
        let rerr = result
            .extrinsics
            .camera_in_lidar
            .rotation
            .angle_to(&t.rotation);
        assert!(result.residual_px < 1e-3, "residual {}", result.residual_px);
        assert!(terr < 0.002, "translation error {terr}");
        assert!(rerr.to_degrees() < 0.1, "rotation error {}°", rerr.to_degrees());
    }

    #[test]
    fn half_pixel_noise_stays_within_tolerance() {
        let obs = observations(0.5, 20, 2);
        let result = calibrate_extrinsics(&obs, &cam(), &perturbed_initial()).unwrap();
        let t = truth();
        let terr = (result.extrinsics.camera_in_lidar.translation - t.translation).norm();
        let rerr = result
            .extrinsics
            .camera_in_lidar
            .rotation
            .angle_to(&t.rotation);
        assert!(terr < 0.02, "translation error {terr}");
        assert!(rerr.to_degrees() < 0.5, "rotation error {}°", rerr.to_degrees());
    }

    #[test]
    fn residual_history_is_monotone() {
        let obs = observations(0.5, 20, 3);
        let result = calibrate_extrinsics(&obs, &cam(), &perturbed_initial()).unwrap();
        for w in result.residual_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "residual increased: {w:?}");
        }
    }

    #[test]
    fn single_viewpoint_is_rejected() {
        let t = truth();
        let inv = t.inverse();
        let p = Vec3::new(2.0, 0.0, 0.0);
        let (u, v) = cam().project(&inv.apply(&p)).unwrap();
        let obs: Vec<_> = (0..8)
            .map(|_| CalibrationObservation {
                point_lidar: p,
                pixel: (u, v),
            })
            .collect();
        assert!(matches!(
            calibrate_extrinsics(&obs, &cam(), &perturbed_initial()),
            Err(CalibrateError::InsufficientDiversity { .. })
        ));
    }

    #[test]
    fn too_few_observations_rejected() {
        let obs = observations(0.0, 5, 4);
        assert!(matches!(
            calibrate_extrinsics(&obs, &cam(), &perturbed_initial()),
            Err(CalibrateError::TooFewObservations { .. })
        ));
    }
}
