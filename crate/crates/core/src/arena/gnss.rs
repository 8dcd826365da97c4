use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{Pose, Vec3};

use super::lidar::gaussian;

/// One-off drift discontinuity, for jump-safety tests.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepInjection {
    pub at_time: f64,
    pub offset: [f64; 3],
}

/// Gaussian random-walk drift of the GNSS ego estimate. `sigma` is the
/// per-axis walk rate in m/√s; near structures it is multiplied by
/// `near_building_factor`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftModel {
    pub sigma: f64,
    pub near_building_factor: f64,
    pub step_injection: Option<StepInjection>,
}

impl Default for DriftModel {
    fn default() -> Self {
        Self {
            sigma: 0.05,
            near_building_factor: 5.0,
            step_injection: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DriftState {
    pub offset: Vec3,
    rng: ChaCha8Rng,
    last_time: Option<f64>,
    injected: bool,
}

impl DriftState {
    pub fn new(seed: u64) -> Self {
        Self {
            offset: Vec3::zeros(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            last_time: None,
            injected: false,
        }
    }
}

/// Advance the drift walk to `now` and return the drifted ego-pose estimate
/// (translation only; heading is assumed IMU-accurate).
pub fn gnss_measure(
    true_pose: &Pose,
    model: &DriftModel,
    state: &mut DriftState,
    now: f64,
    near_building: bool,
) -> Pose {
    let dt = state.last_time.map_or(0.0, |t| (now - t).max(0.0));
    state.last_time = Some(now);
    let sigma = model.sigma
        * if near_building {
            model.near_building_factor
        } else {
            1.0
        };
    if sigma > 0.0 && dt > 0.0 {
        let step = sigma * dt.sqrt();
        state.offset += Vec3::new(
            gaussian(&mut state.rng) * step,
            gaussian(&mut state.rng) * step,
            gaussian(&mut state.rng) * step,
        );
    }
    if let Some(inj) = &model.step_injection {
        if !state.injected && now >= inj.at_time {
            state.offset += Vec3::new(inj.offset[0], inj.offset[1], inj.offset[2]);
            state.injected = true;
        }
    }
    Pose {
        translation: true_pose.translation + state.offset,
        rotation: true_pose.rotation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_measures_truth() {
        let model = DriftModel {
            sigma: 0.0,
            ..Default::default()
        };
        let mut state = DriftState::new(0);
        let truth = Pose::from_yaw(Vec3::new(1.0, 2.0, 3.0), 0.4);
        for k in 0..10 {
            let m = gnss_measure(&truth, &model, &mut state, k as f64, false);
            assert_eq!(m.translation, truth.translation);
        }
    }

    /// Random-walk variance law: per-axis RMS after T seconds is σ·√T.
    fn walk_rms(near_building: bool, factor: f64) -> f64 {
        let model = DriftModel {
            sigma: 0.05,
            near_building_factor: factor,
            step_injection: None,
        };
        let truth = Pose::identity();
        let mut sq_sum = 0.0;
        let seeds = 1000;
        for seed in 0..seeds {
            let mut state = DriftState::new(seed);
            let mut m = Pose::identity();
            for k in 0..=100 {
                m = gnss_measure(&truth, &model, &mut state, k as f64, near_building);
            }
            let d = m.translation;
            sq_sum += (d.x * d.x + d.y * d.y + d.z * d.z) / 3.0;
        }
        (sq_sum / seeds as f64).sqrt()
    }

    #[test]
    fn drift_magnitude_follows_variance_law() {
        // σ=0.05 m/√s over 100 s: per-axis RMS ≈ 0.5 m, within 20%.
        let rms = walk_rms(false, 5.0);
        assert!((rms - 0.5).abs() < 0.1, "rms {rms}");
    }

    #[test]
    fn near_building_scales_the_walk() {
        let rms = walk_rms(true, 5.0);
        assert!((rms - 2.5).abs() < 0.5, "rms {rms}");
    }

    #[test]
    fn step_injection_applies_once() {
        let model = DriftModel {
            sigma: 0.0,
            near_building_factor: 1.0,
            step_injection: Some(StepInjection {
                at_time: 5.0,
                offset: [1.5, 0.0, 0.0],
            }),
        };
        let truth = Pose::identity();
        let mut state = DriftState::new(0);
        let before = gnss_measure(&truth, &model, &mut state, 4.9, false);
        assert_eq!(before.translation.x, 0.0);
        let after = gnss_measure(&truth, &model, &mut state, 5.0, false);
        assert_eq!(after.translation.x, 1.5);
        let later = gnss_measure(&truth, &model, &mut state, 6.0, false);
        assert_eq!(later.translation.x, 1.5);
    }
}
