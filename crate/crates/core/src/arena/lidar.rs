use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{PointCloud, Pose, Vec3};

use super::ArenaModel;

/// Spinning multi-ring LiDAR model. Mount pose places the sensor on the
/// robot body (UAV carries a 10° downturn).
#[derive(Debug, Clone)]
pub struct LidarConfig {
    pub rings: usize,
    pub horizontal_steps: usize,
    /// Total vertical field of view, centered on the sensor's xy-plane.
    pub vertical_fov: f64,
    pub max_range: f64,
    pub range_sigma: f64,
    pub mount: Pose,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            rings: 64,
            horizontal_steps: 1024,
            vertical_fov: 33.2f64.to_radians(),
            max_range: 30.0,
            range_sigma: 0.02,
            mount: Pose::identity(),
        }
    }
}

impl LidarConfig {
    /// Unit ray directions in the sensor frame, one per (ring, step).
    pub fn ray_directions(&self) -> Vec<Vec3> {
        let mut dirs = Vec::with_capacity(self.rings * self.horizontal_steps);
        for ring in 0..self.rings {
            let elev = if self.rings == 1 {
                0.0
            } else {
                -self.vertical_fov / 2.0
                    + self.vertical_fov * ring as f64 / (self.rings - 1) as f64
            };
            let (se, ce) = elev.sin_cos();
            for step in 0..self.horizontal_steps {
                let az = std::f64::consts::TAU * step as f64 / self.horizontal_steps as f64;
                let (sa, ca) = az.sin_cos();
                dirs.push(Vec3::new(ce * ca, ce * sa, se));
            }
        }
        dirs
    }
}

/// Cast one ray per (ring, step) and return the first surface hit with
/// additive Gaussian range noise, expressed in the sensor frame.
/// Bit-identical for identical inputs and seed.
pub fn render_lidar(
    arena: &ArenaModel,
    base_pose: &Pose,
    config: &LidarConfig,
    seed: u64,
) -> PointCloud {
    let sensor_pose = base_pose.compose(&config.mount);
    let origin = sensor_pose.translation;
    let inv = sensor_pose.inverse();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cloud = PointCloud::new("lidar");
    for dir_sensor in config.ray_directions() {
        let dir = sensor_pose.rotate(&dir_sensor);
        if let Some((t, _)) = arena.raycast(&origin, &dir) {
            if t > config.max_range {
                continue;
            }
            let noisy = if config.range_sigma > 0.0 {
                (t + gaussian(&mut rng) * config.range_sigma).min(config.max_range)
            } else {
                t
            };
            let hit = origin + dir * noisy;
            cloud.points.push(inv.apply(&hit));
        }
    }
    cloud
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; draws two uniforms per sample for a fixed stream layout.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
