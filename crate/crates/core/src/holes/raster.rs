use crate::geometry::{GeometryError, PlaneModel, PointCloud, UnitVec3, Vec3};

/// Binary occupancy raster of a plane's inlier points, in an orthographic
/// virtual camera perpendicular to the plane. Pixel (i, j) covers the
/// in-plane square `[i, i+1) × [j, j+1)` in units of `resolution`.
#[derive(Debug, Clone, PartialEq)]
pub struct RasterPlaneImage {
    pub width: usize,
    pub height: usize,
    pub occupancy: Vec<bool>,
    pub resolution: f64,
    /// 3D point at pixel coordinate (0, 0).
    pub origin: Vec3,
    pub axis_u: UnitVec3,
    pub axis_v: UnitVec3,
}

impl RasterPlaneImage {
    pub fn at(&self, i: usize, j: usize) -> bool {
        self.occupancy[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, value: bool) {
        self.occupancy[j * self.width + i] = value;
    }

    /// 3D point of a continuous pixel coordinate (pixel centers are at
    /// integer + 0.5).
    pub fn pixel_to_world(&self, u: f64, v: f64) -> Vec3 {
        self.origin
            + self.axis_u.into_inner() * (u * self.resolution)
            + self.axis_v.into_inner() * (v * self.resolution)
    }

    /// Continuous pixel coordinate of a 3D point (projected on the plane).
    pub fn world_to_pixel(&self, p: &Vec3) -> (f64, f64) {
        let rel = p - self.origin;
        (
            rel.dot(&self.axis_u) / self.resolution,
            rel.dot(&self.axis_v) / self.resolution,
        )
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| o).count()
    }
}

/// Deterministic in-plane basis: `axis_u` from the world axis least aligned
/// with the normal, `axis_v = n × u`.
pub fn plane_basis(normal: &UnitVec3) -> (UnitVec3, UnitVec3) {
    let n = normal.into_inner();
    let candidates = [Vec3::x(), Vec3::y(), Vec3::z()];
    let seed = candidates
        .into_iter()
        .min_by(|a, b| n.dot(a).abs().total_cmp(&n.dot(b).abs()))
        .unwrap();
    let u = UnitVec3::new_normalize(seed - n * n.dot(&seed));
    let v = UnitVec3::new_normalize(n.cross(&u));
    (u, v)
}

const PAD_PX: usize = 2;

/// Mark each inlier's pixel occupied; image bounds are the inliers'
/// bounding rectangle padded by 2 pixels.
pub fn rasterize_plane(
    plane: &PlaneModel,
    cloud: &PointCloud,
    resolution: f64,
) -> Result<RasterPlaneImage, GeometryError> {
    assert!(resolution > 0.0, "resolution must be > 0");
    if plane.inlier_indices.len() < 3 {
        return Err(GeometryError::Degenerate("plane has too few inliers"));
    }
    let (axis_u, axis_v) = plane_basis(&plane.normal);
    let anchor = plane.normal.into_inner() * plane.offset; // a point on the plane
    let mut min_u = f64::INFINITY;
    let mut max_u = f64::NEG_INFINITY;
    let mut min_v = f64::INFINITY;
    let mut max_v = f64::NEG_INFINITY;
    let coords: Vec<(f64, f64)> = plane
        .inlier_indices
        .iter()
        .map(|&i| {
            let rel = cloud.points[i] - anchor;
            let u = rel.dot(&axis_u);
            let v = rel.dot(&axis_v);
            min_u = min_u.min(u);
            max_u = max_u.max(u);
            min_v = min_v.min(v);
            max_v = max_v.max(v);
            (u, v)
        })
        .collect();
    // Cells are centered on the grid: a point at `min + k·res` lands in the
    // middle of cell k, so exact-pitch grids fill one cell per point.
    let span_u = ((max_u - min_u) / resolution).round() as usize + 1;
    let span_v = ((max_v - min_v) / resolution).round() as usize + 1;
    if span_u < 4 || span_v < 4 {
        return Err(GeometryError::Degenerate("inlier extent below 4x4 pixels"));
    }
    let width = span_u + 2 * PAD_PX;
    let height = span_v + 2 * PAD_PX;
    let origin = anchor
        + axis_u.into_inner() * (min_u - (PAD_PX as f64 + 0.5) * resolution)
        + axis_v.into_inner() * (min_v - (PAD_PX as f64 + 0.5) * resolution);
    let mut image = RasterPlaneImage {
        width,
        height,
        occupancy: vec![false; width * height],
        resolution,
        origin,
        axis_u,
        axis_v,
    };
    for (u, v) in coords {
        let i = ((u - min_u) / resolution + 0.5).floor() as usize + PAD_PX;
        let j = ((v - min_v) / resolution + 0.5).floor() as usize + PAD_PX;
        let i = i.min(width - 1);
        let j = j.min(height - 1);
        image.set(i, j, true);
    }
    Ok(image)
}
