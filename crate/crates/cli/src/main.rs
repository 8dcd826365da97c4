//! `emberpipe` — scenario simulation, perception tools, and metrics for the
//! firefighting robot stack.
//!
//! Exit codes: 0 success, 2 validation/input error, 3 mission incomplete.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use emberpipe_core::filter::{Detection, DetectionKind, Tracker};
use emberpipe_core::geometry::{PinholeCamera, PointCloud, Pose, UnitVec3, Vec3};
use emberpipe_core::holes::{detect_holes, HoleParams};
use emberpipe_core::localization::{load_map, register_scan, PreparedMap, RegistrationParams};
use emberpipe_core::metrics::{eval_metrics, range_comparison_csv};
use emberpipe_core::mission::run_mission;
use emberpipe_core::scenario::parse_scenario;
use emberpipe_core::thermal::{
    calibrate_extrinsics, detect_heat, CalibrationObservation, Extrinsics, ThermalImage,
};

#[derive(Parser)]
#[command(name = "emberpipe", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CommandKind,
}

#[derive(Subcommand)]
enum CommandKind {
    /// Run a scenario closed-loop and write the mission report.
    Simulate(SimulateArgs),
    /// Detect circular openings in a point-cloud file.
    DetectHoles(DetectHolesArgs),
    /// Detect heat contours in a 16-bit PGM thermal image.
    DetectHeat(DetectHeatArgs),
    /// Calibrate the LiDAR-to-thermal extrinsics from observations.
    Calibrate(CalibrateArgs),
    /// Replay a detection stream through the target filter.
    FilterReplay(FilterReplayArgs),
    /// Register a scan against a reference map.
    Localize(LocalizeArgs),
    /// Aggregate metrics from a mission report.
    Metrics(MetricsArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.jsonl and trace.log.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DetectHolesArgs {
    #[arg(long)]
    cloud: PathBuf,
    /// JSON file with `HoleParams`; defaults apply when omitted.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct DetectHeatArgs {
    #[arg(long)]
    image: PathBuf,
    #[arg(long, default_value_t = 450.0)]
    lower: f64,
    #[arg(long, default_value_t = 65535.0)]
    upper: f64,
    #[arg(long, default_value_t = 2)]
    min_area: usize,
    #[arg(long, default_value_t = 4000)]
    max_area: usize,
}

#[derive(Args)]
struct CalibrateArgs {
    /// JSON: {"camera": {...}, "initial": {"translation": [..], "rotation_xyzw"?}, "observations": [{"point": [..], "pixel": [u, v]}]}
    #[arg(long)]
    obs: PathBuf,
}

#[derive(Args)]
struct FilterReplayArgs {
    /// Stream file, one detection per line: `t kind x y z nx ny nz`.
    #[arg(long)]
    stream: PathBuf,
    /// Static observer position `x,y,z` used for feasibility checks.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    robot: Vec<f64>,
}

#[derive(Args)]
struct LocalizeArgs {
    #[arg(long)]
    map: PathBuf,
    #[arg(long)]
    scan: PathBuf,
    /// Initial guess `x,y,z,yaw_deg`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    init: Vec<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long)]
    report: PathBuf,
    /// Scenario file providing the arena ground truth.
    #[arg(long)]
    scenario: PathBuf,
    /// Write the range-comparison table here (CSV).
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("EMBERPIPE_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        CommandKind::Simulate(args) => simulate(args),
        CommandKind::DetectHoles(args) => cmd_detect_holes(args),
        CommandKind::DetectHeat(args) => cmd_detect_heat(args),
        CommandKind::Calibrate(args) => cmd_calibrate(args),
        CommandKind::FilterReplay(args) => cmd_filter_replay(args),
        CommandKind::Localize(args) => cmd_localize(args),
        CommandKind::Metrics(args) => cmd_metrics(args),
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    let text = std::fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))?;
    let mut scenario = match parse_scenario(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    log::info!(
        "running scenario {} (seed {})",
        scenario.name,
        scenario.seed
    );
    let report = run_mission(&scenario);
    println!(
        "scenario {} finished at t={:.2}s wall={:.2}s states={:?}",
        report.scenario_name, report.end_time, report.wall_time_s, report.final_states
    );
    for (i, w) in report.per_hole_water.iter().enumerate() {
        println!("hole {i}: {w:.3} L delivered");
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.jsonl"), report.to_jsonl())?;
        let names = report.robot_names();
        for name in &names {
            let file = if names.len() == 1 {
                "trace.log".to_string()
            } else {
                format!("trace-{name}.log")
            };
            std::fs::write(dir.join(file), report.trace_log(name))?;
        }
        println!("report written to {}", dir.display());
    }
    Ok(if report.completed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_detect_holes(args: DetectHolesArgs) -> Result<ExitCode> {
    let cloud = PointCloud::load(&args.cloud)
        .with_context(|| format!("reading {}", args.cloud.display()))?;
    let params: HoleParams = match &args.params {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)
            .with_context(|| format!("parsing {}", path.display()))?,
        None => HoleParams::default(),
    };
    // Detections in the cloud's own frame.
    let detections = detect_holes(&cloud, &Pose::identity(), &params, 0.0);
    for d in &detections {
        println!(
            "{:.4} {:.4} {:.4} {:.4} {:.4} {:.4} {:.4} {:.3}",
            d.position.x,
            d.position.y,
            d.position.z,
            d.normal.x,
            d.normal.y,
            d.normal.z,
            d.diameter,
            d.score
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_detect_heat(args: DetectHeatArgs) -> Result<ExitCode> {
    let image = ThermalImage::load_pgm(&args.image)
        .with_context(|| format!("reading {}", args.image.display()))?;
    if args.lower >= args.upper {
        bail!("--lower must be below --upper");
    }
    let contours = detect_heat(&image, args.lower, args.upper, args.min_area, args.max_area);
    for c in &contours {
        println!(
            "{} {} {} {} {} {:.2} {:.2} {:.1} {:.1} {:.1}",
            c.bbox.0,
            c.bbox.1,
            c.bbox.2,
            c.bbox.3,
            c.area,
            c.center_of_intensity.0,
            c.center_of_intensity.1,
            c.min_intensity,
            c.max_intensity,
            c.mean_intensity
        );
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct CalibFile {
    camera: PinholeCamera,
    initial: CalibPose,
    observations: Vec<CalibObs>,
}

#[derive(serde::Deserialize)]
struct CalibPose {
    translation: [f64; 3],
    /// Unit quaternion (x, y, z, w); identity when omitted.
    #[serde(default)]
    rotation_xyzw: Option<[f64; 4]>,
    /// Convenience: a camera looking along body +X with this downward pitch.
    #[serde(default)]
    pitch_down_deg: Option<f64>,
}

#[derive(serde::Deserialize)]
struct CalibObs {
    point: [f64; 3],
    pixel: [f64; 2],
}

fn cmd_calibrate(args: CalibrateArgs) -> Result<ExitCode> {
    let file: CalibFile = serde_json::from_str(&std::fs::read_to_string(&args.obs)?)
        .with_context(|| format!("parsing {}", args.obs.display()))?;
    let rotation = match (file.initial.rotation_xyzw, file.initial.pitch_down_deg) {
        (Some([x, y, z, w]), _) => nalgebra::UnitQuaternion::new_normalize(
            nalgebra::Quaternion::new(w, x, y, z),
        ),
        (None, Some(pitch)) => Pose::camera_in_body(pitch.to_radians(), Vec3::zeros()).rotation,
        (None, None) => Pose::camera_in_body(0.0, Vec3::zeros()).rotation,
    };
    let initial = Extrinsics {
        camera_in_lidar: Pose::new(Vec3::from(file.initial.translation), rotation),
    };
    let observations: Vec<CalibrationObservation> = file
        .observations
        .iter()
        .map(|o| CalibrationObservation {
            point_lidar: Vec3::from(o.point),
            pixel: (o.pixel[0], o.pixel[1]),
        })
        .collect();
    match calibrate_extrinsics(&observations, &file.camera, &initial) {
        Ok(result) => {
            let p = result.extrinsics.camera_in_lidar;
            let q = p.rotation.quaternion();
            println!(
                "translation {:.6} {:.6} {:.6}",
                p.translation.x, p.translation.y, p.translation.z
            );
            println!("rotation_xyzw {:.8} {:.8} {:.8} {:.8}", q.i, q.j, q.k, q.w);
            println!("residual_px {:.6}", result.residual_px);
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("calibration failed: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_filter_replay(args: FilterReplayArgs) -> Result<ExitCode> {
    if args.robot.len() != 3 {
        bail!("--robot expects x,y,z");
    }
    let robot = Vec3::new(args.robot[0], args.robot[1], args.robot[2]);
    let text = std::fs::read_to_string(&args.stream)?;
    let mut tracker = Tracker::new(Default::default());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            bail!("line {}: expected `t kind x y z nx ny nz`", lineno + 1);
        }
        let t: f64 = fields[0].parse().context("bad t")?;
        let kind = match fields[1] {
            "thermal" => DetectionKind::Thermal,
            "hole" => DetectionKind::Hole,
            other => bail!("line {}: unknown kind {other:?}", lineno + 1),
        };
        let nums: Vec<f64> = fields[2..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<Result<_, _>>()
            .context("bad float")?;
        let det = Detection {
            position: Vec3::new(nums[0], nums[1], nums[2]),
            normal: UnitVec3::new_normalize(Vec3::new(nums[3], nums[4], nums[5])),
            kind,
            timestamp: t,
        };
        tracker.check_timeout(t);
        let outcome = tracker.ingest(det, &robot, t);
        let outcome_str = match outcome {
            emberpipe_core::filter::IngestOutcome::Admitted => "admitted".into(),
            emberpipe_core::filter::IngestOutcome::Initialized => "initialized".into(),
            emberpipe_core::filter::IngestOutcome::AdmittedInit => "admitted-init".into(),
            emberpipe_core::filter::IngestOutcome::Rejected(r) => r.as_str().to_string(),
        };
        match tracker.estimate() {
            Ok((p, n)) => println!(
                "{t:.3} {outcome_str} estimate {:.4} {:.4} {:.4} {:.4} {:.4} {:.4}",
                p.x, p.y, p.z, n.x, n.y, n.z
            ),
            Err(_) => println!("{t:.3} {outcome_str} initializing"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_localize(args: LocalizeArgs) -> Result<ExitCode> {
    if args.init.len() != 4 {
        bail!("--init expects x,y,z,yaw_deg");
    }
    let map = match load_map(&args.map) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("bad map: {e}");
            return Ok(ExitCode::from(2));
        }
    };
    let scan = PointCloud::load(&args.scan)?;
    let initial = Pose::from_yaw(
        Vec3::new(args.init[0], args.init[1], args.init[2]),
        args.init[3].to_radians(),
    );
    let prepared = PreparedMap::build(&map.cloud, 0.5);
    match register_scan(&scan, &prepared, &initial, &RegistrationParams::default()) {
        Ok(reg) => {
            println!(
                "pose {:.4} {:.4} {:.4} yaw {:.4} rms {:.4} inliers {:.3}",
                reg.pose.translation.x,
                reg.pose.translation.y,
                reg.pose.translation.z,
                reg.pose.yaw().to_degrees(),
                reg.rms,
                reg.inlier_fraction
            );
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("registration failed: {e}");
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_metrics(args: MetricsArgs) -> Result<ExitCode> {
    let scenario_text = std::fs::read_to_string(&args.scenario)?;
    let scenario = match parse_scenario(&scenario_text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    let report = read_report(&args.report, &scenario)?;
    match eval_metrics(&report, &scenario.arena) {
        Ok(metrics) => {
            println!("{}", serde_json::to_string_pretty(&metrics)?);
            if let Some(path) = &args.csv {
                std::fs::write(path, range_comparison_csv(&metrics))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Err(e) => {
            eprintln!("{e}");
            Ok(ExitCode::from(2))
        }
    }
}

/// Rebuild a MissionReport from a report.jsonl file.
fn read_report(
    path: &PathBuf,
    scenario: &emberpipe_core::scenario::Scenario,
) -> Result<emberpipe_core::mission::MissionReport> {
    use emberpipe_core::mission::{MissionReport, Record};
    let text = std::fs::read_to_string(path)?;
    let mut records: Vec<Record> = Vec::new();
    let mut per_hole_water = vec![0.0; scenario.arena.holes.len()];
    let mut sprayed_total = Vec::new();
    let mut final_states = Vec::new();
    let mut completed = false;
    let mut end_time = 0.0;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)?;
        if value["type"] == "summary" {
            per_hole_water = serde_json::from_value(value["per_hole_water"].clone())?;
            sprayed_total = serde_json::from_value(value["sprayed_total"].clone())?;
            final_states = serde_json::from_value(value["final_states"].clone())?;
            completed = value["completed"].as_bool().unwrap_or(false);
            end_time = value["end_time"].as_f64().unwrap_or(0.0);
        } else {
            records.push(parse_record(&value)?);
        }
    }
    Ok(MissionReport {
        scenario_name: scenario.name.clone(),
        seed: scenario.seed,
        records,
        per_hole_water,
        sprayed_total,
        final_states,
        completed,
        end_time,
        wall_time_s: 0.0,
    })
}

fn parse_record(value: &serde_json::Value) -> Result<emberpipe_core::mission::Record> {
    use emberpipe_core::mission::Record;
    let t = value["t"].as_f64().unwrap_or(0.0);
    let robot = value["robot"].as_str().unwrap_or("").to_string();
    Ok(match value["type"].as_str().unwrap_or("") {
        "trace" => Record::Trace {
            t,
            robot,
            state: value["state"].as_str().unwrap_or("").into(),
            x: value["x"].as_f64().unwrap_or(0.0),
            y: value["y"].as_f64().unwrap_or(0.0),
            z: value["z"].as_f64().unwrap_or(0.0),
            yaw: value["yaw"].as_f64().unwrap_or(0.0),
            pump: value["pump"].as_bool().unwrap_or(false),
            water: value["water"].as_f64().unwrap_or(0.0),
            reason: value["reason"].as_str().unwrap_or("-").into(),
            true_x: value["true_x"].as_f64().unwrap_or(0.0),
            true_y: value["true_y"].as_f64().unwrap_or(0.0),
            true_z: value["true_z"].as_f64().unwrap_or(0.0),
            true_yaw: value["true_yaw"].as_f64().unwrap_or(0.0),
            arm: None,
        },
        "detection" => Record::Detection {
            t,
            robot,
            method: value["method"].as_str().unwrap_or("").into(),
            outcome: value["outcome"].as_str().unwrap_or("").into(),
            x: value["x"].as_f64().unwrap_or(0.0),
            y: value["y"].as_f64().unwrap_or(0.0),
            z: value["z"].as_f64().unwrap_or(0.0),
            est_range: value["est_range"].as_f64(),
            true_range: value["true_range"].as_f64(),
            pos_err: value["pos_err"].as_f64(),
            normal_err_deg: value["normal_err_deg"].as_f64(),
        },
        "offset" => Record::Offset {
            t,
            robot,
            outcome: value["outcome"].as_str().unwrap_or("").into(),
            delta: value["delta"].as_f64().unwrap_or(0.0),
        },
        "map-switch" => Record::MapSwitch {
            t,
            robot,
            from: value["from"].as_str().unwrap_or("").into(),
            to: value["to"].as_str().unwrap_or("").into(),
        },
        "loc-error" => Record::LocError {
            t,
            robot,
            localized_err: value["localized_err"].as_f64().unwrap_or(0.0),
            raw_err: value["raw_err"].as_f64().unwrap_or(0.0),
        },
        "water" => Record::Water {
            t,
            robot,
            hole: value["hole"].as_u64().unwrap_or(0) as usize,
            delivered: value["delivered"].as_f64().unwrap_or(0.0),
            cumulative: value["cumulative"].as_f64().unwrap_or(0.0),
        },
        "jump" => Record::Jump { t, robot },
        other => bail!("unknown record type {other:?}"),
    })
}
