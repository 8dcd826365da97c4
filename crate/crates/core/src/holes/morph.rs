use super::raster::RasterPlaneImage;

/// Disk structuring-element offsets for a given radius.
fn disk_offsets(radius: usize) -> Vec<(i32, i32)> {
    let r = radius as i32;
    let mut offsets = Vec::new();
    for dj in -r..=r {
        for di in -r..=r {
            if di * di + dj * dj <= r * r {
                offsets.push((di, dj));
            }
        }
    }
    offsets
}

fn dilate(image: &RasterPlaneImage, offsets: &[(i32, i32)]) -> RasterPlaneImage {
    let mut out = image.clone();
    for j in 0..image.height {
        for i in 0..image.width {
            if image.at(i, j) {
                continue;
            }
            let hit = offsets.iter().any(|&(di, dj)| {
                let ii = i as i32 + di;
                let jj = j as i32 + dj;
                ii >= 0
                    && jj >= 0
                    && (ii as usize) < image.width
                    && (jj as usize) < image.height
                    && image.at(ii as usize, jj as usize)
            });
            if hit {
                out.set(i, j, true);
            }
        }
    }
    out
}

/// Erosion treats out-of-bounds as occupied, so closing is the identity on
/// a solid image.
fn erode(image: &RasterPlaneImage, offsets: &[(i32, i32)]) -> RasterPlaneImage {
    let mut out = image.clone();
    for j in 0..image.height {
        for i in 0..image.width {
            if !image.at(i, j) {
                continue;
            }
            let all = offsets.iter().all(|&(di, dj)| {
                let ii = i as i32 + di;
                let jj = j as i32 + dj;
                if ii < 0
                    || jj < 0
                    || ii as usize >= image.width
                    || jj as usize >= image.height
                {
                    true
                } else {
                    image.at(ii as usize, jj as usize)
                }
            });
            if !all {
                out.set(i, j, false);
            }
        }
    }
    out
}

/// Binary morphological closing (dilate then erode) with a disk element.
pub fn close_gaps(image: &RasterPlaneImage, kernel_radius: usize) -> RasterPlaneImage {
    assert!(kernel_radius >= 1, "kernel_radius must be >= 1");
    let offsets = disk_offsets(kernel_radius);
    erode(&dilate(image, &offsets), &offsets)
}
