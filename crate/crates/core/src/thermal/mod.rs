//! Thermal contour detection, two heat-source 3D localization methods
//! (LiDAR projection and bounding-box size), and LiDAR↔thermal extrinsic
//! calibration.

mod calibrate;
mod localize;

pub use calibrate::{calibrate_extrinsics, CalibrationObservation, CalibrationResult};
pub use localize::{estimate_distance_bbox, localize_heat_lidar, CalibMap, Extrinsics};

use std::path::Path;

/// Scalar intensity grid in arbitrary radiometric units (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
    pub timestamp: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum ThermalIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad pgm: {0}")]
    Format(String),
}

impl ThermalImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
            timestamp: 0.0,
        }
    }

    pub fn at(&self, u: usize, v: usize) -> f64 {
        self.data[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.data[v * self.width + u] = value;
    }

    /// 16-bit binary portable graymap (P5, maxval 65535, big-endian),
    /// values rounded and clamped.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &v in &self.data {
            let q = v.round().clamp(0.0, 65535.0) as u16;
            out.extend_from_slice(&q.to_be_bytes());
        }
        out
    }

    pub fn from_pgm(bytes: &[u8]) -> Result<ThermalImage, ThermalIoError> {
        let mut header = Vec::new();
        let mut pos = 0;
        // Header: magic, width, height, maxval separated by whitespace;
        // `#` comments allowed.
        while header.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(ThermalIoError::Format("truncated header".into()));
            }
            header.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| {
                ThermalIoError::Format("non-utf8 header".into())
            })?);
        }
        pos += 1; // single whitespace after maxval
        if header[0] != "P5" {
            return Err(ThermalIoError::Format(format!("magic {:?}", header[0])));
        }
        let width: usize = header[1]
            .parse()
            .map_err(|_| ThermalIoError::Format("bad width".into()))?;
        let height: usize = header[2]
            .parse()
            .map_err(|_| ThermalIoError::Format("bad height".into()))?;
        if header[3] != "65535" {
            return Err(ThermalIoError::Format("expected 16-bit maxval".into()));
        }
        let need = width * height * 2;
        let raw = bytes
            .get(pos..pos + need)
            .ok_or_else(|| ThermalIoError::Format("truncated pixel data".into()))?;
        let mut image = ThermalImage::new(width, height);
        for (i, chunk) in raw.chunks_exact(2).enumerate() {
            image.data[i] = u16::from_be_bytes([chunk[0], chunk[1]]) as f64;
        }
        Ok(image)
    }

    pub fn save_pgm(&self, path: &Path) -> Result<(), ThermalIoError> {
        std::fs::write(path, self.to_pgm())?;
        Ok(())
    }

    pub fn load_pgm(path: &Path) -> Result<ThermalImage, ThermalIoError> {
        Self::from_pgm(&std::fs::read(path)?)
    }
}

/// Connected region of thresholded pixels with its summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalContour {
    pub pixels: Vec<(u32, u32)>,
    pub area: usize,
    /// Inclusive pixel bounds (u0, v0, u1, v1).
    pub bbox: (u32, u32, u32, u32),
    /// Intensity-weighted centroid in continuous pixel coordinates
    /// (pixel centers at integer + 0.5).
    pub center_of_intensity: (f64, f64),
    pub min_intensity: f64,
    pub max_intensity: f64,
    pub mean_intensity: f64,
    pub timestamp: f64,
}

impl ThermalContour {
    pub fn bbox_width_px(&self) -> u32 {
        self.bbox.2 - self.bbox.0 + 1
    }

    pub fn bbox_height_px(&self) -> u32 {
        self.bbox.3 - self.bbox.1 + 1
    }
}

/// 4-connected components of pixels with `lower ≤ I ≤ upper`, gated to
/// `min_area ≤ area ≤ max_area`, largest first.
pub fn detect_heat(
    image: &ThermalImage,
    lower: f64,
    upper: f64,
    min_area: usize,
    max_area: usize,
) -> Vec<ThermalContour> {
    assert!(lower < upper, "lower bound must be below upper");
    assert!(min_area >= 1, "min_area must be >= 1");
    let w = image.width;
    let h = image.height;
    let inside = |u: usize, v: usize| {
        let x = image.at(u, v);
        x >= lower && x <= upper
    };
    let mut visited = vec![false; w * h];
    let mut contours = Vec::new();
    let mut stack = Vec::new();
    for v0 in 0..h {
        for u0 in 0..w {
            if visited[v0 * w + u0] || !inside(u0, v0) {
                continue;
            }
            stack.push((u0, v0));
            visited[v0 * w + u0] = true;
            let mut pixels = Vec::new();
            while let Some((u, v)) = stack.pop() {
                pixels.push((u as u32, v as u32));
                let mut push = |uu: usize, vv: usize, stack: &mut Vec<(usize, usize)>| {
                    if !visited[vv * w + uu] && inside(uu, vv) {
                        visited[vv * w + uu] = true;
                        stack.push((uu, vv));
                    }
                };
                if u > 0 {
                    push(u - 1, v, &mut stack);
                }
                if u + 1 < w {
                    push(u + 1, v, &mut stack);
                }
                if v > 0 {
                    push(u, v - 1, &mut stack);
                }
                if v + 1 < h {
                    push(u, v + 1, &mut stack);
                }
            }
            if pixels.len() < min_area || pixels.len() > max_area {
                continue;
            }
            contours.push(summarize(image, pixels));
        }
    }
    contours.sort_by(|a, b| {
        b.area
            .cmp(&a.area)
            .then(a.bbox.0.cmp(&b.bbox.0))
            .then(a.bbox.1.cmp(&b.bbox.1))
    });
    contours
}

fn summarize(image: &ThermalImage, mut pixels: Vec<(u32, u32)>) -> ThermalContour {
    pixels.sort_unstable();
    let mut bbox = (u32::MAX, u32::MAX, 0u32, 0u32);
    let mut weight = 0.0;
    let mut cu = 0.0;
    let mut cv = 0.0;
    let mut min_i = f64::INFINITY;
    let mut max_i = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &(u, v) in &pixels {
        let i = image.at(u as usize, v as usize);
        bbox.0 = bbox.0.min(u);
        bbox.1 = bbox.1.min(v);
        bbox.2 = bbox.2.max(u);
        bbox.3 = bbox.3.max(v);
        weight += i;
        cu += i * (u as f64 + 0.5);
        cv += i * (v as f64 + 0.5);
        min_i = min_i.min(i);
        max_i = max_i.max(i);
        sum += i;
    }
    let area = pixels.len();
    ThermalContour {
        area,
        bbox,
        center_of_intensity: if weight > 0.0 {
            (cu / weight, cv / weight)
        } else {
            (
                (bbox.0 + bbox.2) as f64 / 2.0 + 0.5,
                (bbox.1 + bbox.3) as f64 / 2.0 + 0.5,
            )
        },
        min_intensity: min_i,
        max_intensity: max_i,
        mean_intensity: sum / area as f64,
        pixels,
        timestamp: image.timestamp,
    }
}
