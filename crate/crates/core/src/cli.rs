//! The `trackbox` command line.
//!
//! Exit codes: 0 on success, 1 when the inputs are rejected or an operation
//! fails, 2 on usage errors. Numbers printed to the terminal carry six
//! significant digits; files keep full precision.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{
    import_ground_truth, load_annotations, load_manifest, load_point_cloud, save_annotations, write_point_cloud,
    GtSchema,
};
use crate::evaluation::{evaluate_against_file, export_metric_series, EvalOptions, MetricsReport};
use crate::geometry::{detect_ground_plane, project_box, ClassLabel, RansacParams, Rect};
use crate::server::{serve, ServerConfig};
use crate::store::AnnotationStore;

#[derive(Debug, Parser)]
#[command(name = "trackbox", version, about = "3D box and track annotation for LiDAR + camera sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Serve the annotation API (and the UI assets) for a data root.
    Serve(ServeArgs),
    /// Score annotations against a reference.
    Evaluate(EvaluateArgs),
    /// Fill the frames between two keyframes of a track.
    Interpolate(InterpolateArgs),
    /// Transfer every 3D box into 2D camera labels.
    Project(ProjectArgs),
    /// Remove ground returns from a point cloud.
    GroundFilter(GroundFilterArgs),
    /// Convert a reference file into the native annotation format.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    data_root: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value_t = 5)]
    autosave_secs: u64,
    /// Directory with the browser UI build, served at `/`.
    #[arg(long)]
    static_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// `native` or `external-boxes`.
    #[arg(long, default_value = "native")]
    gt_schema: GtSchema,
    #[arg(long, default_value_t = crate::evaluation::DEFAULT_IOU_THRESHOLD)]
    iou_threshold: f64,
    #[arg(long)]
    track_consistent: bool,
    /// Per-frame metric series (CSV).
    #[arg(long)]
    out: PathBuf,
    /// Full report (JSON).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InterpolateArgs {
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    track: u64,
    #[arg(long)]
    start: u32,
    #[arg(long)]
    end: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct GroundFilterArgs {
    #[arg(long)]
    pointcloud: PathBuf,
    /// Points within this distance above the plane are dropped (meters).
    #[arg(long, default_value_t = 0.2)]
    margin: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    schema: GtSchema,
    #[arg(long)]
    out: PathBuf,
}

/// A 2D label written by `project`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct CameraLabel {
    pub frame: u32,
    pub track_id: u64,
    pub class: ClassLabel,
    pub rect: Rect,
    pub visible_corner_count: u8,
}

type Failure = Box<dyn std::error::Error>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    let result = match cli.command {
        Command::Serve(a) => cmd_serve(a, err),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Interpolate(a) => cmd_interpolate(a, out),
        Command::Project(a) => cmd_project(a, out),
        Command::GroundFilter(a) => cmd_ground_filter(a, out),
        Command::Convert(a) => cmd_convert(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            let mut source = e.source();
            while let Some(s) = source {
                let _ = writeln!(err, "  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

/// Six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{x:.decimals$}")
}

fn cmd_serve(a: ServeArgs, err: &mut dyn Write) -> Result<(), Failure> {
    let mut config = ServerConfig::new(a.data_root);
    config.port = a.port;
    config.autosave_interval = Duration::from_secs(a.autosave_secs);
    config.static_dir = a.static_dir;
    let rt = tokio::runtime::Runtime::new()?;
    let _ = writeln!(err, "starting on port {}", config.port);
    rt.block_on(serve(config))?;
    Ok(())
}

fn print_report(out: &mut dyn Write, r: &MetricsReport) -> std::io::Result<()> {
    let a = &r.aggregate;
    writeln!(out, "sequence            {}", r.sequence_id)?;
    writeln!(out, "frames              {}", r.per_frame.len())?;
    writeln!(out, "iou_threshold       {}", sig6(r.iou_threshold))?;
    writeln!(out, "precision           {}", sig6(a.precision))?;
    writeln!(out, "recall              {}", sig6(a.recall))?;
    writeln!(out, "f1                  {}", sig6(a.f1))?;
    writeln!(out, "mean_iou            {}", sig6(a.mean_iou))?;
    writeln!(out, "frac_iou_above_0_6  {}", sig6(a.frac_iou_above_0_6))?;
    writeln!(
        out,
        "tp/fp/fn            {}/{}/{}",
        a.true_positives, a.false_positives, a.false_negatives
    )?;
    for (class, n) in &a.per_class_counts {
        writeln!(out, "count {:<13} {n}", class.as_str())?;
    }
    Ok(())
}

fn cmd_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let pred = load_annotations(&a.pred)?;
    let options = EvalOptions {
        iou_threshold: a.iou_threshold,
        track_consistent: a.track_consistent,
    };
    let report = evaluate_against_file(&pred, &a.gt, a.gt_schema, &options)?;
    export_metric_series(&report, &a.out)?;
    if let Some(p) = &a.report {
        std::fs::write(p, report.to_json())?;
    }
    print_report(out, &report)?;
    Ok(())
}

fn cmd_interpolate(a: InterpolateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let file = load_annotations(&a.annotations)?;
    let frame_count = file.last_frame().map_or(0, |f| f + 1).max(a.end.saturating_add(1));
    let mut store = AnnotationStore::from_annotation_file(&file, frame_count)?;
    // A file carries no keyframe marks; the two named frames become the
    // control points.
    for f in [a.start, a.end] {
        if store.get(f, a.track).is_some() {
            store.mark_keyframe(f, a.track, true)?;
        }
    }
    let written = store.interpolate_range(a.track, a.start, a.end)?;
    save_annotations(&store.to_annotation_file(), &a.out)?;
    writeln!(out, "track {} frames {}..{}: {written} boxes written", a.track, a.start, a.end)?;
    Ok(())
}

fn cmd_project(a: ProjectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let manifest = load_manifest(&a.manifest)?;
    let file = load_annotations(&a.annotations)?;
    file.check_frame_range(manifest.frame_count())?;
    std::fs::create_dir_all(&a.out_dir)?;
    for cam in &manifest.cameras {
        let labels: Vec<CameraLabel> = file
            .boxes()
            .filter_map(|(frame, b)| {
                project_box(cam, b).map(|p| CameraLabel {
                    frame,
                    track_id: b.track_id,
                    class: b.class_label,
                    rect: p.rect,
                    visible_corner_count: p.visible_corner_count,
                })
            })
            .collect();
        let path = a.out_dir.join(format!("{}.json", cam.name()));
        let mut text = serde_json::to_string_pretty(&labels)?;
        text.push('\n');
        std::fs::write(&path, text)?;
        writeln!(out, "{:<12} {} labels", cam.name(), labels.len())?;
    }
    Ok(())
}

fn cmd_ground_filter(a: GroundFilterArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let started = Instant::now();
    let cloud = load_point_cloud(&a.pointcloud)?;
    let positions: Vec<_> = cloud.iter().map(|p| p.position).collect();
    let fit = detect_ground_plane(&positions, a.seed, &RansacParams::default())?;
    let kept = crate::geometry::remove_ground(&cloud, |p| p.position, &fit.plane, a.margin);
    write_point_cloud(&a.out, &kept)?;
    let n = fit.plane.normal;
    writeln!(
        out,
        "plane normal ({}, {}, {}) offset {}",
        sig6(n.x),
        sig6(n.y),
        sig6(n.z),
        sig6(fit.plane.offset)
    )?;
    writeln!(
        out,
        "{} points, {} ground inliers, {} kept ({} ms)",
        cloud.len(),
        fit.inliers.len(),
        kept.len(),
        started.elapsed().as_millis()
    )?;
    Ok(())
}

fn cmd_convert(a: ConvertArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let file = import_ground_truth(&a.input, a.schema)?;
    save_annotations(&file, &a.out)?;
    writeln!(out, "{} boxes on {} frames -> {}", file.len(), file.frames().count(), display(&a.out))?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = run_with(args.iter().copied(), &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn significant_digits() {
        assert_eq!(sig6(1.0), "1.00000");
        assert_eq!(sig6(0.5), "0.500000");
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
        assert_eq!(sig6(123.456789), "123.457");
        assert_eq!(sig6(1234567.0), "1234567");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-0.0123456789), "-0.0123457");
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run_capture(&["trackbox", "frobnicate"]).0, 2);
        assert_eq!(run_capture(&["trackbox"]).0, 2);
        assert_eq!(run_capture(&["trackbox", "convert", "--in", "a", "--schema", "native", "--out", "b", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["trackbox", "convert", "--in", "a", "--schema", "weird", "--out", "b"]).0, 2);
        let (code, out, _) = run_capture(&["trackbox", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("ground-filter"));
    }

    #[test]
    fn missing_input_exits_one() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.json");
        let out = dir.path().join("o.json");
        let (code, _, err) = run_capture(&[
            "trackbox",
            "convert",
            "--in",
            missing.to_str().unwrap(),
            "--schema",
            "native",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error:"), "{err}");
    }
}
