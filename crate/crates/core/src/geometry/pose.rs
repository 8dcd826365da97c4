use nalgebra::{Rotation3, UnitQuaternion};

use super::Vec3;

/// Rigid transform: rotation followed by translation.
///
/// A pose names the transform from a child frame into its parent, so
/// `robot_pose.apply(p_body)` maps a body-frame point into the world.
/// Body frames follow the x-forward / y-left / z-up convention; camera
/// optical frames are x-right / y-down / z-forward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub translation: Vec3,
    pub rotation: UnitQuaternion<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            translation: Vec3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(translation: Vec3, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            translation,
            rotation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            translation,
            rotation: UnitQuaternion::identity(),
        }
    }

    /// Pose at `translation` rotated by `yaw` about +Z.
    pub fn from_yaw(translation: Vec3, yaw: f64) -> Self {
        Self {
            translation,
            rotation: UnitQuaternion::from_axis_angle(&Vec3::z_axis(), yaw),
        }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            translation: self.translation + self.rotation * other.translation,
            rotation: self.rotation * other.rotation,
        }
    }

    pub fn inverse(&self) -> Pose {
        let inv_rot = self.rotation.inverse();
        Pose {
            translation: -(inv_rot * self.translation),
            rotation: inv_rot,
        }
    }

    /// Transform a point from the child frame into the parent frame.
    pub fn apply(&self, point: &Vec3) -> Vec3 {
        self.rotation * point + self.translation
    }

    /// Rotate a free vector (no translation).
    pub fn rotate(&self, vector: &Vec3) -> Vec3 {
        self.rotation * vector
    }

    /// Yaw of the body +X axis projected on the ground plane.
    pub fn yaw(&self) -> f64 {
        let fwd = self.rotation * Vec3::x();
        fwd.y.atan2(fwd.x)
    }

    pub fn translation_distance(&self, other: &Pose) -> f64 {
        (self.translation - other.translation).norm()
    }

    pub fn rotation_angle(&self, other: &Pose) -> f64 {
        self.rotation.angle_to(&other.rotation)
    }

    /// Rotation is orthonormal with determinant +1 within `tol`.
    pub fn rotation_valid(&self, tol: f64) -> bool {
        (self.rotation.norm() - 1.0).abs() <= tol
    }

    /// Mount pose of a camera on a body: optical frame (x-right, y-down,
    /// z-forward) pitched down by `pitch_down` radians from body +X.
    pub fn camera_in_body(pitch_down: f64, offset: Vec3) -> Pose {
        // Columns: camera x, y, z axes expressed in body coordinates.
        let base = Rotation3::from_matrix_unchecked(nalgebra::Matrix3::new(
            0.0, 0.0, 1.0, //
            -1.0, 0.0, 0.0, //
            0.0, -1.0, 0.0,
        ));
        let pitch = Rotation3::from_axis_angle(&Vec3::y_axis(), pitch_down);
        Pose {
            translation: offset,
            rotation: UnitQuaternion::from_rotation_matrix(&(pitch * base)),
        }
    }

    /// Mount pose of a sensor sharing body axes, pitched down by
    /// `pitch_down` radians (positive tips the +X axis below horizontal).
    pub fn pitched_mount(pitch_down: f64, offset: Vec3) -> Pose {
        Pose {
            translation: offset,
            rotation: UnitQuaternion::from_axis_angle(&Vec3::y_axis(), pitch_down),
        }
    }
}
