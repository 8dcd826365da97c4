use std::fmt::Write as _;
use std::path::Path;

use super::Vec3;

/// A LiDAR measurement: 3D points with optional per-point intensity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub intensity: Option<Vec<f64>>,
    pub frame_id: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CloudIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl PointCloud {
    pub fn new(frame_id: impl Into<String>) -> Self {
        Self {
            points: Vec::new(),
            intensity: None,
            frame_id: frame_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every `stride`-th point, preserving order. `stride` 0 or 1 is a copy.
    pub fn subsample(&self, stride: usize) -> PointCloud {
        let stride = stride.max(1);
        PointCloud {
            points: self.points.iter().step_by(stride).copied().collect(),
            intensity: self
                .intensity
                .as_ref()
                .map(|i| i.iter().step_by(stride).copied().collect()),
            frame_id: self.frame_id.clone(),
        }
    }

    /// ASCII format: `#`-prefixed header lines (`# frame_id: <label>`),
    /// then one `x y z [intensity]` line per point.
    pub fn to_ascii(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# frame_id: {}", self.frame_id);
        for (i, p) in self.points.iter().enumerate() {
            match &self.intensity {
                Some(ints) => {
                    let _ = writeln!(out, "{:.6} {:.6} {:.6} {:.6}", p.x, p.y, p.z, ints[i]);
                }
                None => {
                    let _ = writeln!(out, "{:.6} {:.6} {:.6}", p.x, p.y, p.z);
                }
            }
        }
        out
    }

    pub fn from_ascii(text: &str) -> Result<PointCloud, CloudIoError> {
        let mut cloud = PointCloud::new("");
        let mut intensities: Vec<f64> = Vec::new();
        let mut saw_intensity = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(frame) = rest.trim().strip_prefix("frame_id:") {
                    cloud.frame_id = frame.trim().to_string();
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 && fields.len() != 4 {
                return Err(CloudIoError::Parse {
                    line: line_no,
                    message: format!("expected 3 or 4 fields, got {}", fields.len()),
                });
            }
            let mut vals = [0f64; 4];
            for (i, f) in fields.iter().enumerate() {
                vals[i] = f.parse().map_err(|e| CloudIoError::Parse {
                    line: line_no,
                    message: format!("bad float {f:?}: {e}"),
                })?;
                if !vals[i].is_finite() {
                    return Err(CloudIoError::Parse {
                        line: line_no,
                        message: format!("non-finite value {f:?}"),
                    });
                }
            }
            let has_intensity = fields.len() == 4;
            match saw_intensity {
                None => saw_intensity = Some(has_intensity),
                Some(expected) if expected != has_intensity => {
                    return Err(CloudIoError::Parse {
                        line: line_no,
                        message: "mixed lines with and without intensity".into(),
                    });
                }
                _ => {}
            }
            cloud.points.push(Vec3::new(vals[0], vals[1], vals[2]));
            if has_intensity {
                if vals[3] < 0.0 {
                    return Err(CloudIoError::Parse {
                        line: line_no,
                        message: "negative intensity".into(),
                    });
                }
                intensities.push(vals[3]);
            }
        }
        if saw_intensity == Some(true) {
            cloud.intensity = Some(intensities);
        }
        Ok(cloud)
    }

    pub fn save(&self, path: &Path) -> Result<(), CloudIoError> {
        std::fs::write(path, self.to_ascii())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PointCloud, CloudIoError> {
        Self::from_ascii(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trip_with_intensity() {
        let mut c = PointCloud::new("lidar");
        c.points.push(Vec3::new(1.0, -2.0, 0.25));
        c.points.push(Vec3::new(0.125, 3.5, -0.5));
        c.intensity = Some(vec![10.0, 0.0]);
        let back = PointCloud::from_ascii(&c.to_ascii()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn ascii_round_trip_without_intensity() {
        let mut c = PointCloud::new("map");
        c.points.push(Vec3::new(-0.5, 0.0, 7.0));
        let back = PointCloud::from_ascii(&c.to_ascii()).unwrap();
        assert_eq!(back, c);
        assert!(back.intensity.is_none());
    }

    #[test]
    fn empty_cloud_allowed() {
        let c = PointCloud::from_ascii("# frame_id: empty\n").unwrap();
        assert!(c.is_empty());
        assert_eq!(c.frame_id, "empty");
    }

    #[test]
    fn mixed_columns_rejected() {
        let err = PointCloud::from_ascii("1 2 3 4\n1 2 3\n").unwrap_err();
        assert!(matches!(err, CloudIoError::Parse { line: 2, .. }));
    }

    #[test]
    fn bad_float_reports_line() {
        let err = PointCloud::from_ascii("1 2 3\n1 x 3\n").unwrap_err();
        assert!(matches!(err, CloudIoError::Parse { line: 2, .. }));
    }
}
