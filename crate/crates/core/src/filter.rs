//! Fuses thermal and hole detections into a single tracked fire estimate.
//!
//! Thermal detections initialize the estimate; hole detections refine it
//! when fresh heat evidence exists. The tracker keeps a FIFO history of the
//! ten most recent admitted detections and estimates position and normal as
//! running averages over it.

use std::collections::VecDeque;

use crate::geometry::{UnitVec3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionKind {
    Thermal,
    Hole,
}

/// A perception output: position and sensor-facing surface normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub position: Vec3,
    pub normal: UnitVec3,
    pub kind: DetectionKind,
    pub timestamp: f64,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterParams {
    /// Max angle between a detection normal and the line of sight back to
    /// the robot (degrees).
    pub feasibility_angle_deg: f64,
    /// Gate radius around the current estimate (meters).
    pub gate_radius: f64,
    /// Max angle between a detection normal and the estimated normal (degrees).
    pub normal_gate_deg: f64,
    /// Initialization window length and the cluster size required in it.
    pub init_window: usize,
    pub init_required: usize,
    /// Cluster radius around the candidate centroid (meters).
    pub init_cluster_radius: f64,
    /// Thermal detections are suppressed from the history while a hole
    /// detection this recent exists (seconds).
    pub hole_recency: f64,
    /// Hole detections require a heat detection this recent (seconds).
    pub heat_recency: f64,
    /// Hole detections must lie this close to the latest heat (meters).
    pub heat_ball: f64,
    pub history_cap: usize,
    /// Tracking resets after this long without an admitted detection (seconds).
    pub timeout: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            feasibility_angle_deg: 45.0,
            gate_radius: 1.0,
            normal_gate_deg: 45.0,
            init_window: 20,
            init_required: 10,
            init_cluster_radius: 1.0,
            hole_recency: 1.0,
            heat_recency: 1.0,
            heat_ball: 1.0,
            history_cap: 10,
            timeout: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Initializing,
    Tracking,
}

/// Why a detection was not admitted to the history.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    InfeasibleAngle,
    OutsideBall,
    NormalDisagrees,
    NoRecentHeat,
    HoleFarFromHeat,
    ThermalSuppressedByHole,
    /// Hole detections play no role before tracking starts.
    NotTracking,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::InfeasibleAngle => "infeasible-angle",
            RejectReason::OutsideBall => "outside-ball",
            RejectReason::NormalDisagrees => "normal-disagrees",
            RejectReason::NoRecentHeat => "no-recent-heat",
            RejectReason::HoleFarFromHeat => "hole-far-from-heat",
            RejectReason::ThermalSuppressedByHole => "thermal-suppressed-by-hole",
            RejectReason::NotTracking => "not-tracking",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestOutcome {
    /// Buffered during initialization.
    AdmittedInit,
    /// This detection completed initialization; tracking started.
    Initialized,
    /// Appended to the history while tracking.
    Admitted,
    Rejected(RejectReason),
}

impl IngestOutcome {
    pub fn admitted(&self) -> bool {
        matches!(
            self,
            IngestOutcome::Admitted | IngestOutcome::Initialized | IngestOutcome::AdmittedInit
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FilterError {
    #[error("tracker not initialized")]
    NotInitialized,
}

/// Single-target tracker state.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub params: FilterParams,
    pub phase: Phase,
    history: VecDeque<Detection>,
    init_buffer: VecDeque<Detection>,
    latest_thermal: Option<Detection>,
    latest_hole_time: Option<f64>,
    last_added_time: f64,
}

impl Tracker {
    pub fn new(params: FilterParams) -> Self {
        Self {
            params,
            phase: Phase::Initializing,
            history: VecDeque::new(),
            init_buffer: VecDeque::new(),
            latest_thermal: None,
            latest_hole_time: None,
            last_added_time: 0.0,
        }
    }

    pub fn history(&self) -> &VecDeque<Detection> {
        &self.history
    }

    pub fn init_buffer_len(&self) -> usize {
        self.init_buffer.len()
    }

    pub fn last_added_time(&self) -> f64 {
        self.last_added_time
    }

    pub fn latest_thermal(&self) -> Option<&Detection> {
        self.latest_thermal.as_ref()
    }

    pub fn latest_hole_time(&self) -> Option<f64> {
        self.latest_hole_time
    }

    /// Line-of-sight feasibility: the detection normal must point back
    /// toward the robot within the feasibility angle.
    pub fn feasible(&self, d: &Detection, robot_position: &Vec3) -> bool {
        let los = robot_position - d.position;
        let norm = los.norm();
        if norm < 1e-12 {
            return false;
        }
        let cos = d.normal.dot(&los) / norm;
        cos.clamp(-1.0, 1.0).acos() <= self.params.feasibility_angle_deg.to_radians()
    }

    /// Process one detection observed from `robot_position` at time `now`.
    pub fn ingest(&mut self, d: Detection, robot_position: &Vec3, now: f64) -> IngestOutcome {
        match self.phase {
            Phase::Initializing => self.ingest_initializing(d, robot_position, now),
            Phase::Tracking => self.ingest_tracking(d, robot_position, now),
        }
    }

    fn ingest_initializing(
        &mut self,
        d: Detection,
        robot_position: &Vec3,
        now: f64,
    ) -> IngestOutcome {
        if d.kind == DetectionKind::Hole {
            return IngestOutcome::Rejected(RejectReason::NotTracking);
        }
        if !self.feasible(&d, robot_position) {
            return IngestOutcome::Rejected(RejectReason::InfeasibleAngle);
        }
        self.init_buffer.push_back(d);
        while self.init_buffer.len() > self.params.init_window {
            self.init_buffer.pop_front();
        }
        self.latest_thermal = Some(d);
        if let Some(seed) = self.try_initialize() {
            self.history = seed;
            self.phase = Phase::Tracking;
            self.init_buffer.clear();
            self.last_added_time = now;
            return IngestOutcome::Initialized;
        }
        IngestOutcome::AdmittedInit
    }

    /// Initialization succeeds when `init_required` of the buffered heat
    /// positions lie within the cluster radius of their common centroid;
    /// outliers are trimmed farthest-first. Returns the seed history
    /// (the most recent qualifying detections, in chronological order).
    fn try_initialize(&self) -> Option<VecDeque<Detection>> {
        let mut candidates: Vec<Detection> = self.init_buffer.iter().copied().collect();
        while candidates.len() >= self.params.init_required {
            let centroid: Vec3 =
                candidates.iter().map(|d| d.position).sum::<Vec3>() / candidates.len() as f64;
            let (far_idx, far_dist) = candidates
                .iter()
                .enumerate()
                .map(|(i, d)| (i, (d.position - centroid).norm()))
                .max_by(|a, b| a.1.total_cmp(&b.1))?;
            if far_dist <= self.params.init_cluster_radius {
                let skip = candidates.len() - self.params.init_required;
                return Some(candidates.into_iter().skip(skip).collect());
            }
            candidates.remove(far_idx);
        }
        None
    }

    fn ingest_tracking(&mut self, d: Detection, robot_position: &Vec3, now: f64) -> IngestOutcome {
        if !self.feasible(&d, robot_position) {
            return IngestOutcome::Rejected(RejectReason::InfeasibleAngle);
        }
        let (p_star, n_star) = match self.estimate() {
            Ok(e) => e,
            Err(_) => return IngestOutcome::Rejected(RejectReason::NotTracking),
        };
        if (d.position - p_star).norm() > self.params.gate_radius {
            return IngestOutcome::Rejected(RejectReason::OutsideBall);
        }
        let normal_angle = d.normal.dot(&n_star).clamp(-1.0, 1.0).acos();
        if normal_angle > self.params.normal_gate_deg.to_radians() {
            return IngestOutcome::Rejected(RejectReason::NormalDisagrees);
        }
        match d.kind {
            DetectionKind::Thermal => {
                // The latest valid heat detection is tracked even when a
                // fresh hole detection keeps it out of the history.
                self.latest_thermal = Some(d);
                let hole_fresh = self
                    .latest_hole_time
                    .is_some_and(|t| now - t <= self.params.hole_recency);
                if hole_fresh {
                    return IngestOutcome::Rejected(RejectReason::ThermalSuppressedByHole);
                }
                self.push_history(d, now);
                IngestOutcome::Admitted
            }
            DetectionKind::Hole => {
                let heat = match &self.latest_thermal {
                    Some(t) if now - t.timestamp <= self.params.heat_recency => *t,
                    _ => return IngestOutcome::Rejected(RejectReason::NoRecentHeat),
                };
                if (d.position - heat.position).norm() > self.params.heat_ball {
                    return IngestOutcome::Rejected(RejectReason::HoleFarFromHeat);
                }
                self.push_history(d, now);
                self.latest_hole_time = Some(now);
                IngestOutcome::Admitted
            }
        }
    }

    fn push_history(&mut self, d: Detection, now: f64) {
        self.history.push_back(d);
        while self.history.len() > self.params.history_cap {
            self.history.pop_front();
        }
        self.last_added_time = now;
    }

    /// Running averages over the detection history.
    pub fn estimate(&self) -> Result<(Vec3, UnitVec3), FilterError> {
        if self.phase != Phase::Tracking || self.history.is_empty() {
            return Err(FilterError::NotInitialized);
        }
        let n = self.history.len() as f64;
        let p: Vec3 = self.history.iter().map(|d| d.position).sum::<Vec3>() / n;
        let sum_n: Vec3 = self
            .history
            .iter()
            .map(|d| d.normal.into_inner())
            .sum::<Vec3>();
        if sum_n.norm() < 1e-12 {
            return Err(FilterError::NotInitialized);
        }
        Ok((p, UnitVec3::new_normalize(sum_n)))
    }

    /// Reset to initialization if tracking has gone stale. Returns true when
    /// a reset happened.
    pub fn check_timeout(&mut self, now: f64) -> bool {
        if self.phase == Phase::Tracking && now - self.last_added_time > self.params.timeout {
            self.reset();
            return true;
        }
        false
    }

    pub fn reset(&mut self) {
        self.phase = Phase::Initializing;
        self.history.clear();
        self.init_buffer.clear();
        self.latest_thermal = None;
        self.latest_hole_time = None;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(kind: DetectionKind, p: Vec3, n: Vec3, t: f64) -> Detection {
        Detection {
            position: p,
            normal: UnitVec3::new_normalize(n),
            kind,
            timestamp: t,
        }
    }

    fn thermal(p: Vec3, t: f64) -> Detection {
        det(DetectionKind::Thermal, p, -Vec3::x(), t)
    }

    fn hole(p: Vec3, t: f64) -> Detection {
        det(DetectionKind::Hole, p, -Vec3::x(), t)
    }

    /// Robot 5 m in front of the wall plane x = 5, fires near (5, 0, 1).
    fn robot() -> Vec3 {
        Vec3::new(0.0, 0.0, 1.0)
    }

    fn tracking_tracker() -> Tracker {
        let mut tr = Tracker::new(FilterParams::default());
        for k in 0..10 {
            let d = thermal(Vec3::new(5.0, 0.01 * k as f64, 1.0), 0.1 * k as f64);
            tr.ingest(d, &robot(), 0.1 * k as f64);
        }
        assert_eq!(tr.phase, Phase::Tracking);
        tr
    }

    #[test]
    fn feasibility_boundaries() {
        let tr = Tracker::new(FilterParams::default());
        // Normal pointing exactly at the robot.
        let d0 = det(
            DetectionKind::Thermal,
            Vec3::new(5.0, 0.0, 1.0),
            -Vec3::x(),
            0.0,
        );
        assert!(tr.feasible(&d0, &robot()));
        for (deg, expect) in [(44.9, true), (45.1, false), (180.0, false)] {
            let a = (deg as f64).to_radians();
            let n = Vec3::new(-a.cos(), a.sin(), 0.0);
            let d = det(DetectionKind::Thermal, Vec3::new(5.0, 0.0, 1.0), n, 0.0);
            assert_eq!(tr.feasible(&d, &robot()), expect, "angle {deg}");
        }
    }

    #[test]
    fn ten_clustered_heat_detections_initialize() {
        let mut tr = Tracker::new(FilterParams::default());
        for k in 0..9 {
            let d = thermal(Vec3::new(5.0, 0.03 * k as f64, 1.0), k as f64 * 0.1);
            assert_eq!(
                tr.ingest(d, &robot(), k as f64 * 0.1),
                IngestOutcome::AdmittedInit
            );
        }
        let d = thermal(Vec3::new(5.0, 0.27, 1.0), 0.9);
        assert_eq!(tr.ingest(d, &robot(), 0.9), IngestOutcome::Initialized);
        assert_eq!(tr.phase, Phase::Tracking);
        assert_eq!(tr.history().len(), 10);
    }

    #[test]
    fn init_requires_cluster_within_radius() {
        // Ten feasible detections, one of them beyond the cluster radius of
        // the remaining centroid: no initialization.
        let mut tr = Tracker::new(FilterParams::default());
        for k in 0..9 {
            tr.ingest(thermal(Vec3::new(5.0, 0.0, 1.0), k as f64 * 0.1), &robot(), k as f64 * 0.1);
        }
        let outlier = thermal(Vec3::new(5.0, 4.0, 1.0), 0.95);
        assert_eq!(tr.ingest(outlier, &robot(), 0.95), IngestOutcome::AdmittedInit);
        assert_eq!(tr.phase, Phase::Initializing);
        // The tenth clustered detection initializes despite the outlier.
        let d = thermal(Vec3::new(5.0, 0.01, 1.0), 1.0);
        assert_eq!(tr.ingest(d, &robot(), 1.0), IngestOutcome::Initialized);
    }

    #[test]
    fn hole_admitted_then_thermal_suppressed() {
        let mut tr = tracking_tracker();
        // Heat seen 0.4 s before the hole, 0.6 m away from it.
        let heat = thermal(Vec3::new(5.0, 0.6, 1.0), 1.0);
        assert_eq!(tr.ingest(heat, &robot(), 1.0), IngestOutcome::Admitted);
        let h = hole(Vec3::new(5.0, 0.0, 1.0), 1.4);
        assert_eq!(tr.ingest(h, &robot(), 1.4), IngestOutcome::Admitted);
        // A thermal 0.3 s later is kept out of the history by the fresh
        // hole, but still updates the latest-heat bookkeeping.
        let t2 = thermal(Vec3::new(5.0, 0.1, 1.0), 1.7);
        assert_eq!(
            tr.ingest(t2, &robot(), 1.7),
            IngestOutcome::Rejected(RejectReason::ThermalSuppressedByHole)
        );
        assert_eq!(tr.latest_thermal.unwrap().timestamp, 1.7);
    }

    #[test]
    fn hole_without_recent_heat_rejected() {
        let mut tr = tracking_tracker();
        // Last thermal was at t = 0.9; a hole at t = 2.5 is beyond the 1 s
        // heat-recency window.
        let h = hole(Vec3::new(5.0, 0.0, 1.0), 2.5);
        assert_eq!(
            tr.ingest(h, &robot(), 2.5),
            IngestOutcome::Rejected(RejectReason::NoRecentHeat)
        );
    }

    #[test]
    fn hole_far_from_latest_heat_rejected() {
        let mut tr = tracking_tracker();
        let heat = thermal(Vec3::new(5.0, 0.0, 1.0), 1.0);
        tr.ingest(heat, &robot(), 1.0);
        // Inside the estimate gate but more than 1 m from the latest heat.
        let h = hole(Vec3::new(5.0, 0.9, 1.45), 1.2);
        let (p_star, _) = tr.estimate().unwrap();
        assert!((h.position - p_star).norm() <= 1.0);
        assert_eq!(
            tr.ingest(h, &robot(), 1.2),
            IngestOutcome::Rejected(RejectReason::HoleFarFromHeat)
        );
    }

    #[test]
    fn gate_boundaries_are_exact() {
        let eps = 1e-6;
        let base = tracking_tracker();
        let (p_star, _) = base.estimate().unwrap();
        let mut a = base.clone();
        let inside = thermal(p_star + Vec3::new(0.0, 1.0 - eps, 0.0), 1.0);
        assert!(a.ingest(inside, &robot(), 1.0).admitted());
        let mut b = base.clone();
        let outside = thermal(p_star + Vec3::new(0.0, 1.0 + eps, 0.0), 1.0);
        assert_eq!(
            b.ingest(outside, &robot(), 1.0),
            IngestOutcome::Rejected(RejectReason::OutsideBall)
        );
    }

    #[test]
    fn estimate_is_arithmetic_mean() {
        let mut tr = tracking_tracker();
        tr.history.clear();
        tr.history.push_back(thermal(Vec3::new(0.0, 0.0, 0.0), 0.0));
        let (p, _) = tr.estimate().unwrap();
        assert_eq!(p, Vec3::zeros());
        tr.history.push_back(thermal(Vec3::new(1.0, 0.0, 0.0), 0.1));
        let (p, _) = tr.estimate().unwrap();
        assert_eq!(p, Vec3::new(0.5, 0.0, 0.0));
    }

    #[test]
    fn estimate_error_follows_clt() {
        // H of 10 noisy detections (σ = 0.1 m): per-axis RMS of the mean
        // ≈ σ/√10, Monte-Carlo over 1000 seeds, within 25%.
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let truth = Vec3::new(5.0, 0.0, 1.0);
        let mut sq = 0.0;
        let runs = 1000;
        for seed in 0..runs {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut gauss = || {
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen_range(0.0..1.0);
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() * 0.1
            };
            let mut tr = tracking_tracker();
            tr.history.clear();
            for k in 0..10 {
                let p = truth + Vec3::new(gauss(), gauss(), gauss());
                tr.history.push_back(thermal(p, k as f64 * 0.01));
            }
            let (p, _) = tr.estimate().unwrap();
            let e = p - truth;
            sq += (e.x * e.x + e.y * e.y + e.z * e.z) / 3.0;
        }
        let rms = (sq / runs as f64).sqrt();
        let expected = 0.1 / 10f64.sqrt();
        assert!(
            (rms - expected).abs() < 0.25 * expected,
            "rms {rms} vs {expected}"
        );
    }

    #[test]
    fn timeout_boundaries() {
        let mut tr = tracking_tracker();
        let last = tr.last_added_time();
        assert!(!tr.check_timeout(last + 1.9));
        assert_eq!(tr.phase, Phase::Tracking);
        assert!(tr.check_timeout(last + 2.1));
        assert_eq!(tr.phase, Phase::Initializing);
        assert!(tr.history().is_empty());
        // Initializing phase never times out.
        assert!(!tr.check_timeout(last + 100.0));
    }

    #[test]
    fn rejection_leaves_state_unchanged_except_latest_thermal() {
        let mut tr = tracking_tracker();
        let before_history: Vec<Detection> = tr.history().iter().copied().collect();
        let before_estimate = tr.estimate().unwrap();
        let far = thermal(Vec3::new(5.0, 3.0, 1.0), 1.0);
        assert!(!tr.ingest(far, &robot(), 1.0).admitted());
        let after_history: Vec<Detection> = tr.history().iter().copied().collect();
        assert_eq!(before_history, after_history);
        let after_estimate = tr.estimate().unwrap();
        assert_eq!(before_estimate.0, after_estimate.0);
    }

    #[test]
    fn history_never_exceeds_cap() {
        let mut tr = tracking_tracker();
        for k in 0..50 {
            let t = 1.0 + k as f64 * 0.05;
            let d = thermal(Vec3::new(5.0, 0.0, 1.0), t);
            tr.ingest(d, &robot(), t);
            assert!(tr.history().len() <= 10);
            assert!(tr.init_buffer_len() <= 20);
        }
    }

    #[test]
    fn extinguished_fire_recovers_to_initializing() {
        // When thermal detections cease, holes are starved by heat recency
        // and the 2 s timeout re-initializes the tracker.
        let mut tr = tracking_tracker();
        let mut now = 1.0;
        tr.ingest(thermal(Vec3::new(5.0, 0.0, 1.0), now), &robot(), now);
        // Holes keep arriving after the fire goes out.
        let mut timed_out = false;
        for _ in 0..20 {
            now += 0.25;
            let h = hole(Vec3::new(5.0, 0.0, 1.0), now);
            let out = tr.ingest(h, &robot(), now);
            if now - 1.0 > 1.0 + 1e-9 {
                assert_eq!(out, IngestOutcome::Rejected(RejectReason::NoRecentHeat));
            }
            if tr.check_timeout(now) {
                timed_out = true;
                break;
            }
        }
        assert!(timed_out);
        assert_eq!(tr.phase, Phase::Initializing);
    }
}
