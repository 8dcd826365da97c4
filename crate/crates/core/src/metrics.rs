//! Deterministic aggregate statistics over a mission report, including the
//! range-binned comparison of the two heat-distance estimators.

use crate::arena::ArenaModel;
use crate::mission::{MissionReport, Record};

#[derive(Debug, Clone, serde::Serialize)]
pub struct Metrics {
    /// RMS position error of filter-admitted detections (m).
    pub detection_position_rms: f64,
    /// RMS normal error of filter-admitted detections (degrees).
    pub detection_normal_rms_deg: f64,
    /// RMS localized pose error (m).
    pub localization_rms: f64,
    /// First time cumulative delivery into a heated hole reached the
    /// scenario threshold.
    pub time_to_extinguish: Option<f64>,
    /// Delivered-into-heated-holes over total water expelled.
    pub water_efficiency: f64,
    pub range_bins: Vec<RangeBin>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RangeBin {
    pub range_center: f64,
    pub bbox_mean_err: Option<f64>,
    pub bbox_count: usize,
    pub lidar_mean_err: Option<f64>,
    pub lidar_count: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("incomplete report: {0}")]
    IncompleteReport(&'static str),
}

pub const RANGE_BIN_WIDTH: f64 = 0.25;

/// Water threshold used for the time-to-extinguish metric.
pub const EXTINGUISH_THRESHOLD: f64 = 0.3;

pub fn eval_metrics(report: &MissionReport, arena: &ArenaModel) -> Result<Metrics, MetricsError> {
    if report.records.is_empty() {
        return Err(MetricsError::IncompleteReport("report has no records"));
    }
    if !report
        .records
        .iter()
        .any(|r| matches!(r, Record::Trace { .. }))
    {
        return Err(MetricsError::IncompleteReport("report has no trace"));
    }

    let mut pos_sq = 0.0;
    let mut pos_n = 0usize;
    let mut norm_sq = 0.0;
    let mut norm_n = 0usize;
    let mut loc_sq = 0.0;
    let mut loc_n = 0usize;
    let mut time_to_extinguish = None;
    let mut bins: std::collections::BTreeMap<i64, (f64, usize, f64, usize)> =
        std::collections::BTreeMap::new();

    for r in &report.records {
        match r {
            Record::Detection {
                method,
                outcome,
                est_range,
                true_range,
                pos_err,
                normal_err_deg,
                ..
            } => {
                let admitted = matches!(outcome.as_str(), "admitted" | "initialized" | "admitted-init");
                if admitted {
                    if let Some(e) = pos_err {
                        pos_sq += e * e;
                        pos_n += 1;
                    }
                    if let Some(e) = normal_err_deg {
                        norm_sq += e * e;
                        norm_n += 1;
                    }
                }
                if let (Some(est), Some(truth)) = (est_range, true_range) {
                    let err = (est - truth).abs();
                    let bin = (truth / RANGE_BIN_WIDTH).round() as i64;
                    let entry = bins.entry(bin).or_insert((0.0, 0, 0.0, 0));
                    match method.as_str() {
                        "thermal-bbox" => {
                            entry.0 += err;
                            entry.1 += 1;
                        }
                        "thermal-lidar" => {
                            entry.2 += err;
                            entry.3 += 1;
                        }
                        _ => {}
                    }
                }
            }
            Record::LocError { localized_err, .. } => {
                loc_sq += localized_err * localized_err;
                loc_n += 1;
            }
            Record::Water { t, hole, cumulative, .. } => {
                if time_to_extinguish.is_none()
                    && arena.holes.get(*hole).map_or(false, |h| h.heated)
                    && *cumulative >= EXTINGUISH_THRESHOLD
                {
                    time_to_extinguish = Some(*t);
                }
            }
            _ => {}
        }
    }

    let delivered_heated: f64 = report
        .per_hole_water
        .iter()
        .zip(&arena.holes)
        .filter(|(_, h)| h.heated)
        .map(|(w, _)| w)
        .sum();
    let sprayed: f64 = report.sprayed_total.iter().sum();

    let range_bins = bins
        .into_iter()
        .map(|(bin, (bbox_sum, bbox_n, lidar_sum, lidar_n))| RangeBin {
            range_center: bin as f64 * RANGE_BIN_WIDTH,
            bbox_mean_err: (bbox_n > 0).then(|| bbox_sum / bbox_n as f64),
            bbox_count: bbox_n,
            lidar_mean_err: (lidar_n > 0).then(|| lidar_sum / lidar_n as f64),
            lidar_count: lidar_n,
        })
        .collect();

    Ok(Metrics {
        detection_position_rms: rms(pos_sq, pos_n),
        detection_normal_rms_deg: rms(norm_sq, norm_n),
        localization_rms: rms(loc_sq, loc_n),
        time_to_extinguish,
        water_efficiency: if sprayed > 0.0 {
            delivered_heated / sprayed
        } else {
            0.0
        },
        range_bins,
    })
}

fn rms(sq: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        (sq / n as f64).sqrt()
    }
}

/// CSV table of the estimator comparison, one row per range bin.
pub fn range_comparison_csv(metrics: &Metrics) -> String {
    let mut out = String::from("range_m,bbox_mean_err_m,bbox_n,lidar_mean_err_m,lidar_n\n");
    for b in &metrics.range_bins {
        out.push_str(&format!(
            "{:.2},{},{},{},{}\n",
            b.range_center,
            b.bbox_mean_err
                .map(|v| format!("{v:.4}"))
                .unwrap_or_default(),
            b.bbox_count,
            b.lidar_mean_err
                .map(|v| format!("{v:.4}"))
                .unwrap_or_default(),
            b.lidar_count,
        ));
    }
    out
}
