//! Browser demo: three interactive views into the simulator — the thermal
//! detector, the LiDAR hole-detection pipeline, and the water-jet arc.
//! Built for wasm32 with wasm-bindgen; every export is a pure function
//! returning JSON for the page to draw.

use wasm_bindgen::prelude::wasm_bindgen;

use emberpipe_core::arena::{
    render_lidar, render_thermal, simulate_jet, Aabb, ArenaModel, Enclosure, Hole, JetModel,
    LidarConfig, Material, WallFacet,
};
use emberpipe_core::geometry::{PinholeCamera, Pose, UnitVec3, Vec3};
use emberpipe_core::holes::{close_gaps, detect_circles, rasterize_plane, HoleParams};
use emberpipe_core::thermal::{detect_heat, estimate_distance_bbox, CalibMap};

fn camera() -> PinholeCamera {
    PinholeCamera {
        fx: 115.0,
        fy: 115.0,
        cx: 80.0,
        cy: 60.0,
        width: 160,
        height: 120,
    }
}

/// Wall at x = `range` with one heated 15 cm hole at eye height.
fn demo_arena(range: f64, heated: bool) -> ArenaModel {
    ArenaModel {
        walls: vec![WallFacet {
            corner: Vec3::new(range, -3.0, 0.0),
            edge_u: Vec3::new(0.0, 6.0, 0.0),
            edge_v: Vec3::new(0.0, 0.0, 3.0),
            material: Material::Solid,
        }],
        holes: vec![Hole {
            center: Vec3::new(range, 0.0, 1.2),
            normal: UnitVec3::new_normalize(-Vec3::x()),
            diameter: 0.15,
            recess_depth: 0.10,
            heated,
            heat_temp: 600.0,
            enclosure: Enclosure::None,
        }],
        floor_z: 0.0,
        bounds: Aabb::new(Vec3::new(-10.0, -10.0, 0.0), Vec3::new(10.0, 10.0, 5.0)),
        ambient_level: 300.0,
        thermal_noise_sigma: 2.0,
    }
}

/// Thermal frame of the heated hole at `range` meters, with detected
/// contours and the bounding-box distance estimate.
#[wasm_bindgen]
pub fn thermal_scene(range: f64, threshold: f64, seed: u32) -> String {
    let range = range.clamp(0.4, 8.0);
    let arena = demo_arena(range, true);
    let cam = camera();
    let pose = Pose::camera_in_body(0.0, Vec3::new(0.0, 0.0, 1.2));
    let image = render_thermal(&arena, &pose, &cam, seed as u64);
    let contours = detect_heat(&image, threshold, 65535.0, 2, 4000);
    let estimate = contours
        .first()
        .and_then(|c| estimate_distance_bbox(c, &cam, 0.15, &CalibMap::identity()).ok())
        .map(|(d, _)| d);

    // 8-bit normalization for the canvas.
    let lo = 280.0;
    let hi = 620.0;
    let pixels: Vec<u8> = image
        .data
        .iter()
        .map(|&v| (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0) as u8)
        .collect();
    let contour_boxes: Vec<serde_json::Value> = contours
        .iter()
        .map(|c| {
            serde_json::json!({
                "bbox": [c.bbox.0, c.bbox.1, c.bbox.2, c.bbox.3],
                "area": c.area,
                "center": [c.center_of_intensity.0, c.center_of_intensity.1],
                "mean": c.mean_intensity,
            })
        })
        .collect();
    serde_json::json!({
        "width": image.width,
        "height": image.height,
        "pixels": pixels,
        "contours": contour_boxes,
        "estimated_distance": estimate,
        "true_distance": range,
    })
    .to_string()
}

/// LiDAR scan of the wall at `range`, the plane raster after morphological
/// closing, and the circles the hole detector found in it.
#[wasm_bindgen]
pub fn hole_scan(range: f64, seed: u32) -> String {
    let range = range.clamp(1.0, 5.0);
    let arena = demo_arena(range, false);
    let pose = Pose::from_translation(Vec3::new(0.0, 0.0, 1.2));
    let config = LidarConfig {
        range_sigma: 0.01,
        ..Default::default()
    };
    let cloud = render_lidar(&arena, &pose, &config, seed as u64);
    let params = HoleParams {
        seed: seed as u64,
        ..Default::default()
    };

    // Run the plane stage by hand so the raster can be drawn.
    let planes = emberpipe_core::geometry::fit_planes_ransac(&cloud, &params.ransac, params.seed);
    let mut raster_json = serde_json::Value::Null;
    let mut circles = Vec::new();
    if let Some(plane) = planes.first() {
        let plane = plane.oriented_towards(&Vec3::zeros());
        if let Ok(raster) = rasterize_plane(&plane, &cloud, params.raster_resolution) {
            let closed = close_gaps(&raster, params.closing_radius_px);
            for hit in detect_circles(&closed, 5, 10, params.circle_score_threshold) {
                circles.push(serde_json::json!({
                    "cx": hit.center.0,
                    "cy": hit.center.1,
                    "r": hit.radius_px,
                    "score": hit.score,
                    "diameter_m": 2.0 * hit.radius_px * params.raster_resolution,
                }));
            }
            let bits: Vec<u8> = closed.occupancy.iter().map(|&o| o as u8).collect();
            raster_json = serde_json::json!({
                "width": closed.width,
                "height": closed.height,
                "occupancy": bits,
            });
        }
    }
    let detections: Vec<serde_json::Value> = emberpipe_core::holes::detect_holes(
        &cloud, &pose, &params, 0.0,
    )
    .iter()
    .map(|d| {
        serde_json::json!({
            "position": [d.position.x, d.position.y, d.position.z],
            "diameter": d.diameter,
            "score": d.score,
        })
    })
    .collect();
    serde_json::json!({
        "points": cloud.len(),
        "raster": raster_json,
        "circles": circles,
        "detections": detections,
        "true_center": [range, 0.0, 1.2],
    })
    .to_string()
}

/// Ballistic arc from a level nozzle toward a wall `target_distance` ahead
/// with a 15 cm hole at `hole_height`; samples the parabola and reports
/// whether the water enters the hole.
#[wasm_bindgen]
pub fn jet_arc(exit_speed: f64, nozzle_height: f64, target_distance: f64, hole_height: f64) -> String {
    let exit_speed = exit_speed.clamp(1.0, 15.0);
    let target_distance = target_distance.clamp(0.5, 6.0);
    let mut arena = demo_arena(target_distance, true);
    arena.holes[0].center.z = hole_height;
    let nozzle = Pose::from_translation(Vec3::new(0.0, 0.0, nozzle_height));
    let jet = JetModel::new(exit_speed, nozzle);
    let result = simulate_jet(&jet, &arena, 1.0);

    // Sample the parabola up to the hit (or the floor).
    let hit_x = result.hit_point.map(|p| p.x).unwrap_or(target_distance);
    let mut samples = Vec::new();
    let mut t = 0.0;
    loop {
        let x = exit_speed * t;
        let z = nozzle_height - 0.5 * 9.81 * t * t;
        samples.push(serde_json::json!([x, z]));
        if x >= hit_x || z <= 0.0 {
            break;
        }
        t += 0.01;
    }
    serde_json::json!({
        "samples": samples,
        "hit_point": result.hit_point.map(|p| [p.x, p.y, p.z]),
        "hole_hit": result.hole_hit,
        "water_per_second": if result.hole_hit.is_some() { jet.flow_rate } else { 0.0 },
        "hole": [target_distance, hole_height, 0.15],
    })
    .to_string()
}
