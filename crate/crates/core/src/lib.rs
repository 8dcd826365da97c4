//! Perception and autonomy stack for an autonomous firefighting UAV/UGV team,
//! exercised entirely against a synthetic arena with known ground truth.
//!
//! The crate is organized around the data flow of the real system:
//!
//! 1. [`arena`] — synthetic world: walls, holes, heat sources, robot
//!    kinematics, GNSS drift, LiDAR/thermal rendering, water-jet ballistics.
//! 2. [`geometry`] — poses, pinhole projection, RANSAC plane fitting,
//!    covariance statistics shared by every perception module.
//! 3. [`holes`] — circular-opening detection in LiDAR clouds (plane
//!    extraction → plane raster → morphology → circle detection).
//! 4. [`thermal`] — heat-contour detection plus two 3D localization
//!    methods (LiDAR projection, bounding-box size) and LiDAR↔thermal
//!    extrinsic calibration.
//! 5. [`localization`] — scan-to-map ICP with drift-offset bookkeeping,
//!    jump detection, and indoor/outdoor map switching.
//! 6. [`filter`] — fuses thermal and hole detections into one tracked
//!    fire estimate with gating, initialization, and timeout rules.
//! 7. [`autonomy`] — UAV and UGV mission state machines.
//! 8. [`mission`] — deterministic closed-loop execution, logging, metrics.

pub mod arena;
pub mod autonomy;
pub mod filter;
pub mod geometry;
pub mod holes;
pub mod localization;
pub mod metrics;
pub mod mission;
pub mod scenario;
pub mod thermal;

pub use geometry::{Pose, UnitVec3, Vec3};
