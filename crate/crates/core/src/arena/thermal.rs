use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{PinholeCamera, Pose};
use crate::thermal::ThermalImage;

use super::{lidar::gaussian, ArenaModel, Surface};

/// Render the thermal camera view: pixels whose center ray reaches a heated
/// plate read the plate temperature, everything else reads ambient, both
/// with additive Gaussian noise. Heated plates are only visible through
/// their aperture, so acrylic enclosures leak nothing outside the narrow
/// frontal cone.
pub fn render_thermal(
    arena: &ArenaModel,
    camera_pose: &Pose,
    camera: &PinholeCamera,
    seed: u64,
) -> ThermalImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut image = ThermalImage::new(camera.width as usize, camera.height as usize);
    let origin = camera_pose.translation;
    for v in 0..camera.height {
        for u in 0..camera.width {
            let ray_cam = camera.ray(u as f64 + 0.5, v as f64 + 0.5);
            let dir = camera_pose.rotate(&ray_cam);
            let level = match arena.raycast(&origin, &dir) {
                Some((_, Surface::Plate(h))) if arena.holes[h].heated => {
                    arena.holes[h].heat_temp
                }
                _ => arena.ambient_level,
            };
            let noise = if arena.thermal_noise_sigma > 0.0 {
                gaussian(&mut rng) * arena.thermal_noise_sigma
            } else {
                0.0
            };
            image.set(u as usize, v as usize, level + noise);
        }
    }
    image
}
