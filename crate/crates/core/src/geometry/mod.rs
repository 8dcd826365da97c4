//! Frames, poses, pinhole projection, plane fitting, and covariance
//! statistics shared by every other module.

mod camera;
mod cloud;
mod plane;
mod pose;

pub use camera::PinholeCamera;
pub use cloud::{CloudIoError, PointCloud};
pub use plane::{fit_planes_ransac, least_squares_plane, mean_and_normal, PlaneModel, RansacParams};
pub use pose::Pose;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type UnitVec3 = nalgebra::Unit<nalgebra::Vector3<f64>>;

#[derive(Debug, thiserror::Error)]
pub enum GeometryError {
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
}
