use super::Vec3;

/// Pinhole intrinsics. Pixel (u, v) has u rightward, v downward, and the
/// cell `[u, u+1) × [v, v+1)` belongs to integer pixel (⌊u⌋, ⌊v⌋).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl PinholeCamera {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err("focal lengths must be positive".into());
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64) {
            return Err("cx outside image".into());
        }
        if !(0.0 <= self.cy && self.cy < self.height as f64) {
            return Err("cy outside image".into());
        }
        Ok(())
    }

    /// Project a camera-frame point. `None` marks points behind the camera
    /// (z ≤ 0). The pixel may fall outside the image bounds.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }

    /// Camera-frame point for pixel (u, v) at depth `z`.
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Vec3 {
        Vec3::new((u - self.cx) / self.fx * z, (v - self.cy) / self.fy * z, z)
    }

    /// Unit ray through pixel (u, v).
    pub fn ray(&self, u: f64, v: f64) -> Vec3 {
        self.unproject(u, v, 1.0).normalize()
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cam() -> PinholeCamera {
        PinholeCamera {
            fx: 100.0,
            fy: 100.0,
            cx: 80.0,
            cy: 60.0,
            width: 160,
            height: 120,
        }
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        assert_eq!(cam().project(&Vec3::new(0.0, 0.0, 1.0)), Some((80.0, 60.0)));
    }

    #[test]
    fn lateral_offset_shifts_pixel() {
        let (u, v) = cam().project(&Vec3::new(0.1, 0.0, 1.0)).unwrap();
        assert_relative_eq!(u, 90.0, epsilon = 1e-12);
        assert_relative_eq!(v, 60.0, epsilon = 1e-12);
    }

    #[test]
    fn behind_camera_is_marked() {
        assert_eq!(cam().project(&Vec3::new(0.0, 0.0, -1.0)), None);
        assert_eq!(cam().project(&Vec3::new(0.0, 0.0, 0.0)), None);
    }

    #[test]
    fn project_unproject_round_trip() {
        let c = cam();
        let p = Vec3::new(0.3, -0.2, 2.5);
        let (u, v) = c.project(&p).unwrap();
        let back = c.unproject(u, v, p.z);
        assert!((back - p).norm() < 1e-9);
    }
}
