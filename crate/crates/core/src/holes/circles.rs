use super::raster::RasterPlaneImage;

/// A circular unoccupied region surrounded by occupied pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleHit {
    /// Continuous pixel coordinates (pixel centers at integer + 0.5).
    pub center: (f64, f64),
    pub radius_px: f64,
    /// Fraction of the circumference supported by boundary pixels.
    pub score: f64,
}

/// Occupied pixels with at least one unoccupied 4-neighbor inside the image.
pub fn boundary_pixels(image: &RasterPlaneImage) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..image.height {
        for i in 0..image.width {
            if !image.at(i, j) {
                continue;
            }
            let open = (i > 0 && !image.at(i - 1, j))
                || (i + 1 < image.width && !image.at(i + 1, j))
                || (j > 0 && !image.at(i, j - 1))
                || (j + 1 < image.height && !image.at(i, j + 1));
            if open {
                out.push((i, j));
            }
        }
    }
    out
}

const RADIAL_BAND: f64 = 0.75;

/// Circumference support: boundary pixels within `±RADIAL_BAND` of the
/// circle each cover an arc of one pixel footprint; the score is the merged
/// angular measure over 2π. This is the scoring definition shared with the
/// brute-force reference in the tests.
pub fn score_circle(boundary: &[(usize, usize)], cx: f64, cy: f64, r: f64) -> f64 {
    score_from_pixels(boundary.iter().copied(), cx, cy, r)
}

fn score_from_pixels(
    boundary: impl Iterator<Item = (usize, usize)>,
    cx: f64,
    cy: f64,
    r: f64,
) -> f64 {
    let half_arc = (0.5 / r).min(std::f64::consts::FRAC_PI_4);
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    for (i, j) in boundary {
        let du = (i as f64 + 0.5) - cx;
        let dv = (j as f64 + 0.5) - cy;
        let dist = (du * du + dv * dv).sqrt();
        if (dist - r).abs() > RADIAL_BAND {
            continue;
        }
        let theta = dv.atan2(du);
        intervals.push((theta - half_arc, theta + half_arc));
    }
    if intervals.is_empty() {
        return 0.0;
    }
    // Unwrap across ±π by duplicating shifted copies, then merge.
    let mut all = Vec::with_capacity(intervals.len() * 2);
    for &(a, b) in &intervals {
        all.push((a, b));
        all.push((a + std::f64::consts::TAU, b + std::f64::consts::TAU));
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut covered = 0.0;
    let mut cur: Option<(f64, f64)> = None;
    for (a, b) in all {
        match cur {
            None => cur = Some((a, b)),
            Some((ca, cb)) => {
                if a <= cb {
                    cur = Some((ca, cb.max(b)));
                } else {
                    covered += cb - ca;
                    cur = Some((a, b));
                }
            }
        }
    }
    if let Some((ca, cb)) = cur {
        covered += cb - ca;
    }
    // The duplicated copies double-count everything except the wrap joint.
    (covered / 2.0 / std::f64::consts::TAU).min(1.0)
}

/// Boundary pixels bucketed on a coarse grid so circle scoring only visits
/// pixels near the candidate.
struct BoundaryIndex {
    cell: usize,
    grid_w: usize,
    grid_h: usize,
    buckets: Vec<Vec<(usize, usize)>>,
}

impl BoundaryIndex {
    fn build(boundary: &[(usize, usize)], width: usize, height: usize) -> Self {
        let cell = 16;
        let grid_w = width / cell + 1;
        let grid_h = height / cell + 1;
        let mut buckets = vec![Vec::new(); grid_w * grid_h];
        for &(i, j) in boundary {
            buckets[(j / cell) * grid_w + i / cell].push((i, j));
        }
        Self {
            cell,
            grid_w,
            grid_h,
            buckets,
        }
    }

    /// Same result as `score_circle` over the full boundary set: every pixel
    /// within the radial band lies in a visited bucket.
    fn score(&self, cx: f64, cy: f64, r: f64) -> f64 {
        let reach = r + RADIAL_BAND + 1.0;
        let c0 = (((cx - reach) / self.cell as f64).floor().max(0.0)) as usize;
        let c1 = ((((cx + reach) / self.cell as f64).floor()) as usize).min(self.grid_w - 1);
        let d0 = (((cy - reach) / self.cell as f64).floor().max(0.0)) as usize;
        let d1 = ((((cy + reach) / self.cell as f64).floor()) as usize).min(self.grid_h - 1);
        let pixels = (d0..=d1).flat_map(|gj| {
            (c0..=c1).flat_map(move |gi| self.buckets[gj * self.grid_w + gi].iter().copied())
        });
        score_from_pixels(pixels, cx, cy, r)
    }
}

fn interior_empty_fraction(image: &RasterPlaneImage, cx: f64, cy: f64, r: f64) -> f64 {
    let rr = 0.7 * r;
    let mut total = 0usize;
    let mut empty = 0usize;
    let i0 = ((cx - rr).floor().max(0.0)) as usize;
    let i1 = ((cx + rr).ceil().min(image.width as f64 - 1.0)) as usize;
    let j0 = ((cy - rr).floor().max(0.0)) as usize;
    let j1 = ((cy + rr).ceil().min(image.height as f64 - 1.0)) as usize;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let du = (i as f64 + 0.5) - cx;
            let dv = (j as f64 + 0.5) - cy;
            if du * du + dv * dv <= rr * rr {
                total += 1;
                if !image.at(i, j) {
                    empty += 1;
                }
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        empty as f64 / total as f64
    }
}

const INTERIOR_EMPTY_MIN: f64 = 0.8;
const RING_OCCUPIED_MIN: f64 = 0.85;

/// Fraction of the surrounding ring `[r+1, r+2.5]` that is occupied.
/// Out-of-bounds pixels count against it: a hole is only a hole when the
/// material around it was actually observed.
fn ring_occupancy(image: &RasterPlaneImage, cx: f64, cy: f64, r: f64) -> f64 {
    let inner = r + 1.0;
    let outer = r + 2.5;
    let mut total = 0usize;
    let mut occupied = 0usize;
    let i0 = (cx - outer).floor() as i64;
    let i1 = (cx + outer).ceil() as i64;
    let j0 = (cy - outer).floor() as i64;
    let j1 = (cy + outer).ceil() as i64;
    for j in j0..=j1 {
        for i in i0..=i1 {
            let du = (i as f64 + 0.5) - cx;
            let dv = (j as f64 + 0.5) - cy;
            let d2 = du * du + dv * dv;
            if d2 < inner * inner || d2 > outer * outer {
                continue;
            }
            total += 1;
            if i >= 0
                && j >= 0
                && (i as usize) < image.width
                && (j as usize) < image.height
                && image.at(i as usize, j as usize)
            {
                occupied += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        occupied as f64 / total as f64
    }
}

/// Hough detection of unoccupied circles: boundary pixels vote into an
/// annulus-banded center accumulator per radius; shortlisted cells are
/// re-scored with the exact circumference-support definition, gated, and
/// non-maximum suppressed within `r_min`.
pub fn detect_circles(
    image: &RasterPlaneImage,
    r_min: usize,
    r_max: usize,
    score_threshold: f64,
) -> Vec<CircleHit> {
    assert!(r_min >= 2, "r_min must be >= 2");
    assert!(r_max >= r_min, "r_max must be >= r_min");
    let boundary = boundary_pixels(image);
    if boundary.is_empty() {
        return Vec::new();
    }
    let w = image.width;
    let h = image.height;
    let mut votes = vec![0u16; w * h];
    let mut candidates: Vec<(usize, usize, usize)> = Vec::new(); // (i, j, r)
    for r in r_min..=r_max {
        votes.fill(0);
        let offsets = annulus_offsets(r);
        for &(bi, bj) in &boundary {
            for &(di, dj) in &offsets {
                let ci = bi as i32 + di;
                let cj = bj as i32 + dj;
                if ci >= 0 && cj >= 0 && (ci as usize) < w && (cj as usize) < h {
                    votes[cj as usize * w + ci as usize] += 1;
                }
            }
        }
        // Accumulator local maxima only; plateau ties keep the first cell
        // in scan order.
        let need = ((std::f64::consts::TAU * r as f64 * 0.5) as u16).max(6);
        for j in 0..h {
            for i in 0..w {
                let v = votes[j * w + i];
                if v < need {
                    continue;
                }
                let mut is_peak = true;
                'scan: for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let ni = i as i64 + di;
                        let nj = j as i64 + dj;
                        if ni < 0 || nj < 0 || ni >= w as i64 || nj >= h as i64 {
                            continue;
                        }
                        let nv = votes[nj as usize * w + ni as usize];
                        let earlier = (nj, ni) < (j as i64, i as i64);
                        if nv > v || (nv == v && earlier) {
                            is_peak = false;
                            break 'scan;
                        }
                    }
                }
                if is_peak {
                    candidates.push((i, j, r));
                }
            }
        }
    }

    // Exact scoring of shortlisted candidates.
    let index = BoundaryIndex::build(&boundary, w, h);
    let mut hits: Vec<CircleHit> = Vec::new();
    for (i, j, r) in candidates {
        let (cx, cy) = (i as f64 + 0.5, j as f64 + 0.5);
        let rf = r as f64;
        // Half-pixel center offsets depress the integer-grid score, so the
        // coarse pass only shortlists; the refined circle is gated below.
        if index.score(cx, cy, rf) < 0.5 * score_threshold {
            continue;
        }
        if interior_empty_fraction(image, cx, cy, rf) < INTERIOR_EMPTY_MIN {
            continue;
        }
        // Sub-pixel refinement: centroid of the unoccupied pixels inside,
        // radius from the empty-disk area.
        let (rcx, rcy, count) = empty_centroid(image, cx, cy, rf + 0.5);
        if count < 3 {
            continue;
        }
        let radius = (count as f64 / std::f64::consts::PI).sqrt();
        let score = index.score(rcx, rcy, radius + 0.5);
        if score < score_threshold {
            continue;
        }
        if interior_empty_fraction(image, rcx, rcy, radius) < INTERIOR_EMPTY_MIN {
            continue;
        }
        if ring_occupancy(image, rcx, rcy, radius) < RING_OCCUPIED_MIN {
            continue;
        }
        hits.push(CircleHit {
            center: (rcx, rcy),
            radius_px: radius,
            score,
        });
    }

    // Non-maximum suppression within r_min, higher score wins; ties break
    // deterministically on radius then position.
    hits.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.radius_px.total_cmp(&b.radius_px))
            .then(a.center.1.total_cmp(&b.center.1))
            .then(a.center.0.total_cmp(&b.center.0))
    });
    let mut kept: Vec<CircleHit> = Vec::new();
    for hit in hits {
        let clash = kept.iter().any(|k| {
            let d = ((k.center.0 - hit.center.0).powi(2) + (k.center.1 - hit.center.1).powi(2))
                .sqrt();
            d < r_min as f64
        });
        if !clash {
            kept.push(hit);
        }
    }
    kept
}

fn empty_centroid(image: &RasterPlaneImage, cx: f64, cy: f64, r: f64) -> (f64, f64, usize) {
    let i0 = ((cx - r).floor().max(0.0)) as usize;
    let i1 = ((cx + r).ceil().min(image.width as f64 - 1.0)) as usize;
    let j0 = ((cy - r).floor().max(0.0)) as usize;
    let j1 = ((cy + r).ceil().min(image.height as f64 - 1.0)) as usize;
    let mut su = 0.0;
    let mut sv = 0.0;
    let mut count = 0usize;
    for j in j0..=j1 {
        for i in i0..=i1 {
            if image.at(i, j) {
                continue;
            }
            let u = i as f64 + 0.5;
            let v = j as f64 + 0.5;
            let du = u - cx;
            let dv = v - cy;
            if du * du + dv * dv <= r * r {
                su += u;
                sv += v;
                count += 1;
            }
        }
    }
    if count == 0 {
        (cx, cy, 0)
    } else {
        (su / count as f64, sv / count as f64, count)
    }
}

/// Integer offsets with distance in `[r-1, r+1]`.
fn annulus_offsets(r: usize) -> Vec<(i32, i32)> {
    let ri = r as i32;
    let mut out = Vec::new();
    for dj in -(ri + 1)..=(ri + 1) {
        for di in -(ri + 1)..=(ri + 1) {
            let d2 = (di * di + dj * dj) as f64;
            let d = d2.sqrt();
            if (d - r as f64).abs() <= 1.0 {
                out.push((di, dj));
            }
        }
    }
    out
}
