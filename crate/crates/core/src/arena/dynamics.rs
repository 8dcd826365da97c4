use crate::geometry::{Pose, Vec3};

use super::{RobotKind, RobotState};

/// Motion command produced by the mission state machines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Command {
    Hover,
    Velocity { linear: Vec3, yaw_rate: f64 },
    Goto { position: Vec3, yaw: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct MotionLimits {
    pub max_speed_xy: f64,
    pub max_speed_z: f64,
    pub max_accel: f64,
    pub max_yaw_rate: f64,
    /// Proportional gain mapping position error to commanded velocity.
    pub goto_gain: f64,
}

impl Default for MotionLimits {
    fn default() -> Self {
        Self {
            max_speed_xy: 2.0,
            max_speed_z: 1.0,
            max_accel: 4.0,
            max_yaw_rate: 1.5,
            goto_gain: 1.2,
        }
    }
}

fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    } else if a < -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    }
    a
}

/// First-order motion toward the commanded velocity with per-axis speed and
/// acceleration caps. UGVs stay on the ground plane (z and attitude fixed,
/// omnidirectional in xy).
pub fn step_dynamics(
    state: &RobotState,
    command: &Command,
    limits: &MotionLimits,
    dt: f64,
) -> RobotState {
    assert!(dt > 0.0, "dt must be > 0");
    let pose = state.true_pose;
    let yaw = pose.yaw();

    let (mut v_des, yaw_rate_des) = match command {
        Command::Hover => (Vec3::zeros(), 0.0),
        Command::Velocity { linear, yaw_rate } => (*linear, *yaw_rate),
        Command::Goto { position, yaw: tgt } => {
            let v = (position - pose.translation) * limits.goto_gain;
            let yaw_err = wrap_angle(tgt - yaw);
            (v, (yaw_err * 3.0).clamp(-limits.max_yaw_rate, limits.max_yaw_rate))
        }
    };

    // Per-axis speed caps: horizontal magnitude and vertical separately.
    let h = Vec3::new(v_des.x, v_des.y, 0.0);
    let hn = h.norm();
    if hn > limits.max_speed_xy {
        let s = limits.max_speed_xy / hn;
        v_des.x *= s;
        v_des.y *= s;
    }
    v_des.z = v_des.z.clamp(-limits.max_speed_z, limits.max_speed_z);

    let mut next = state.clone();
    let dv = v_des - state.velocity;
    let dv_cap = limits.max_accel * dt;
    let dv = if dv.norm() > dv_cap {
        dv * (dv_cap / dv.norm())
    } else {
        dv
    };
    next.velocity = state.velocity + dv;

    let yaw_rate = yaw_rate_des.clamp(-limits.max_yaw_rate, limits.max_yaw_rate);
    next.yaw_rate = yaw_rate;
    let new_yaw = wrap_angle(yaw + yaw_rate * dt);

    let mut translation = pose.translation + next.velocity * dt;
    if state.kind == RobotKind::Ugv {
        translation.z = pose.translation.z;
        next.velocity.z = 0.0;
    }
    next.true_pose = Pose::from_yaw(translation, new_yaw);
    next
}
