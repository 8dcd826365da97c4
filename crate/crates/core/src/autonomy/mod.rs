//! UAV and UGV mission state machines: search routes, extinguish approach
//! with relative navigation, pump gating, jump-safety stop, and the UGV
//! scan/aim/spray procedure. Each FSM is a pure transition function advanced
//! by the mission loop at a fixed rate.

mod ugv;
mod uav;

pub use uav::{UavConfig, UavFsm, UavInputs, UavOutput, UavState};
pub use ugv::{
    aim_step, nozzle_solution, scan_motion, spray_pattern, AimError, ArmConfig, ScanRect,
    SlotConfig, SprayConfig, UgvConfig, UgvFsm, UgvInputs, UgvOutput, UgvState,
};

use crate::geometry::{Pose, UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaypointKind {
    /// Passed without stopping.
    Transfer,
    /// The robot hovers here for a fixed duration, looking for fires.
    Observation,
}

#[derive(Debug, Clone, Copy)]
pub struct Waypoint {
    pub pose: Pose,
    pub kind: WaypointKind,
    pub hover_duration: f64,
}

/// Filter activity relevant to the detection streak, in ingest order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterEvent {
    /// A detection entered the tracker (history or init buffer).
    Admitted,
    /// A quality gate rejected the detection; resets the streak.
    Rejected,
    /// Valid but routed away from the history (precedence bookkeeping);
    /// neither extends nor resets the streak.
    Neutral,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AutonomyError {
    #[error("estimated normal within {0:.1}° of vertical")]
    VerticalNormal(f64),
}

/// Extinguish goal: offset from the fire along the horizontal projection of
/// its normal, at a fixed height above, heading facing the fire.
pub fn extinguish_goal(
    target_position: &Vec3,
    target_normal: &UnitVec3,
    distance: f64,
    height: f64,
) -> Result<Pose, AutonomyError> {
    let h = Vec3::new(target_normal.x, target_normal.y, 0.0);
    let norm = h.norm();
    const VERTICAL_GATE_DEG: f64 = 5.0;
    if norm < VERTICAL_GATE_DEG.to_radians().sin() {
        return Err(AutonomyError::VerticalNormal(VERTICAL_GATE_DEG));
    }
    let h = h / norm;
    let position = target_position + h * distance + Vec3::new(0.0, 0.0, height);
    let yaw = (-h.y).atan2(-h.x);
    Ok(Pose::from_yaw(position, yaw))
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// Pump gating with hysteresis: on while within both tolerances, off on any
/// deviation, and re-engagement only once errors drop to 80% of tolerance.
pub fn pump_logic(
    goal: &Pose,
    current: &Pose,
    pos_tol: f64,
    yaw_tol: f64,
    pump_on: bool,
) -> bool {
    assert!(pos_tol > 0.0 && yaw_tol > 0.0, "tolerances must be positive");
    let pos_err = goal.translation_distance(current);
    let yaw_err = wrap_angle(goal.yaw() - current.yaw()).abs();
    if pump_on {
        pos_err <= pos_tol && yaw_err <= yaw_tol
    } else {
        const REENGAGE: f64 = 0.8;
        pos_err <= REENGAGE * pos_tol && yaw_err <= REENGAGE * yaw_tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn goal_offsets_along_horizontal_normal() {
        let goal = extinguish_goal(
            &Vec3::zeros(),
            &UnitVec3::new_normalize(Vec3::x()),
            2.1,
            0.35,
        )
        .unwrap();
        assert!((goal.translation - Vec3::new(2.1, 0.0, 0.35)).norm() < 1e-12);
        assert_relative_eq!(goal.yaw().abs(), std::f64::consts::PI, epsilon = 1e-12);
    }

    #[test]
    fn goal_rotates_with_the_normal() {
        let goal = extinguish_goal(
            &Vec3::zeros(),
            &UnitVec3::new_normalize(Vec3::y()),
            2.1,
            0.35,
        )
        .unwrap();
        assert!((goal.translation - Vec3::new(0.0, 2.1, 0.35)).norm() < 1e-12);
        assert_relative_eq!(goal.yaw(), -std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn vertical_normal_is_degenerate() {
        let err = extinguish_goal(
            &Vec3::zeros(),
            &UnitVec3::new_normalize(Vec3::z()),
            2.1,
            0.35,
        );
        assert!(err.is_err());
        // 4° from vertical still degenerate, 6° fine.
        let almost = Vec3::new(4f64.to_radians().sin(), 0.0, 4f64.to_radians().cos());
        assert!(extinguish_goal(&Vec3::zeros(), &UnitVec3::new_normalize(almost), 2.1, 0.35).is_err());
        let ok = Vec3::new(6f64.to_radians().sin(), 0.0, 6f64.to_radians().cos());
        assert!(extinguish_goal(&Vec3::zeros(), &UnitVec3::new_normalize(ok), 2.1, 0.35).is_ok());
    }

    #[test]
    fn pump_on_at_goal_off_on_deviation() {
        let goal = Pose::from_yaw(Vec3::new(1.0, 0.0, 1.0), 0.0);
        let pos_tol = 0.25;
        let yaw_tol = 10f64.to_radians();
        assert!(pump_logic(&goal, &goal, pos_tol, yaw_tol, false));
        let off = Pose::from_yaw(Vec3::new(1.0 + 1.2 * pos_tol, 0.0, 1.0), 0.0);
        assert!(!pump_logic(&goal, &off, pos_tol, yaw_tol, true));
    }

    #[test]
    fn pump_reengages_only_below_80_percent() {
        let goal = Pose::from_yaw(Vec3::zeros(), 0.0);
        let pos_tol = 0.25;
        let yaw_tol = 10f64.to_radians();
        let at = |frac: f64| Pose::from_yaw(Vec3::new(frac * pos_tol, 0.0, 0.0), 0.0);
        // Error decays from 1.2× to 0.9×: stays off.
        let mut pump = true;
        pump = pump_logic(&goal, &at(1.2), pos_tol, yaw_tol, pump);
        assert!(!pump);
        pump = pump_logic(&goal, &at(0.9), pos_tol, yaw_tol, pump);
        assert!(!pump, "re-engaged above the 0.8 hysteresis point");
        pump = pump_logic(&goal, &at(0.79), pos_tol, yaw_tol, pump);
        assert!(pump);
        // Once on, it stays on up to the full tolerance.
        pump = pump_logic(&goal, &at(0.95), pos_tol, yaw_tol, pump);
        assert!(pump);
    }
}
