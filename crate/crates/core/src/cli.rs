//! Command-line front end. `flownav <command> --help` lists the flags.
//!
//! Exit codes: 0 success, 1 usage, 2 invalid input, 3 pipeline failure,
//! 4 planner failure recorded as data.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::field::{annotate_with_stages, GoalSpec, Side, StartChoice};
use crate::grid::{extract_free, LabelMapping, NormPoint, Pixel, SemanticMap};
use crate::io::{
    load_scene, manifest_text, read_flow_field, read_json, read_manifest, read_trajectory,
    save_scene, write_atomic, write_json, write_trajectory, AnnotationBundle, AnnotationMeta,
    ManifestEntry,
};
use crate::metrics::{evaluate_episode, field_metrics, MetricsReport};
use crate::planner::{plan_episode, PlanOutcome};
use crate::render::{render_svg, Overlay, RenderOptions};
use crate::rollout::{euler_rollout, query_grid, RolloutMode};
use crate::scene::{gen_instruction, gen_scene, parse_instruction};
use crate::supervision::evaluate_losses;
use crate::trajectory::Trajectory;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;
pub const EXIT_PLANNER_FAILURE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "flownav",
    version,
    about = "Navigation flow fields on 2D semantic maps"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file (defaults to $FLOWNAV_CONFIG, then built-in values)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override one config value, e.g. `--set rollout.mode=unit_speed`
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Worker threads for batch commands (0 = all cores)
    #[arg(long, default_value_t = 0, global = true)]
    pub jobs: usize,
    /// Log progress to stderr
    #[arg(short, long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate scenes, instructions and a dataset manifest
    Gen(GenArgs),
    /// Annotate one episode, or every entry of a manifest
    Annotate(AnnotateArgs),
    /// Roll a trajectory out of a flow field
    Rollout(RolloutArgs),
    /// Plan with the box-driven A* baseline
    Plan(PlanArgs),
    /// Score trajectories (and optionally fields) against annotations
    Eval(EvalArgs),
    /// Draw a scene, field and trajectories as SVG
    Render(RenderArgs),
    /// Direction and magnitude losses between two FFLD flow fields
    LossEval(LossEvalArgs),
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// First seed (defaults to generator.seed)
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds
    #[arg(long, default_value_t = 1)]
    pub count: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct GoalArgs {
    /// Scene PNG (its JSON sidecar sits next to it)
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Templated instruction, e.g. "Go to the left of the sofa."
    #[arg(long)]
    pub instruction: Option<String>,
    /// Target object name, as an alternative to --instruction
    #[arg(long)]
    pub target: Option<String>,
    /// Instance index into the scene's instance list
    #[arg(long)]
    pub instance: Option<usize>,
    #[arg(long, default_value = "none")]
    pub side: Side,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub goal: GoalArgs,
    /// Start-sampling seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fixed start pixel "x,y" instead of sampling
    #[arg(long)]
    pub start: Option<String>,
    /// Output bundle directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Annotate every entry of a JSONL manifest
    #[arg(long, conflicts_with_all = ["out", "start"])]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RolloutArgs {
    /// FFLD flow field
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Annotation bundle; supplies the field and the start
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Start point "u,v" in normalized coordinates
    #[arg(long)]
    pub start: Option<String>,
    /// Overrides rollout.mode
    #[arg(long)]
    pub mode: Option<RolloutMode>,
    /// Overrides rollout.grid_size
    #[arg(long)]
    pub grid: Option<usize>,
    /// Output trajectory JSON (or directory with --batch)
    #[arg(long)]
    pub out: PathBuf,
    /// Roll out every annotated entry of a manifest into --out
    #[arg(long, conflicts_with_all = ["field", "bundle", "start"])]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[command(flatten)]
    pub goal: GoalArgs,
    /// Annotation bundle; supplies scene, goal and start
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Start point "u,v" in normalized coordinates
    #[arg(long)]
    pub start: Option<String>,
    /// Output trajectory JSON (or directory with --batch)
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, conflicts_with_all = ["bundle", "start"])]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted trajectory JSON
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Annotation bundle to score against
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Predicted FFLD field for AE/ME
    #[arg(long)]
    pub pred_field: Option<PathBuf>,
    /// Scene PNG overriding the one recorded in the bundle
    #[arg(long)]
    pub scene: Option<PathBuf>,
    /// Report JSON (stdout when absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Append-style CSV of report rows
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Evaluate every manifest entry; predictions come from --pred-dir
    #[arg(long, requires = "pred_dir", conflicts_with_all = ["pred", "bundle", "pred_field"])]
    pub batch: Option<PathBuf>,
    /// Directory holding one `<episode>.json` trajectory per manifest entry
    #[arg(long)]
    pub pred_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    /// Predicted trajectory drawn over the annotation
    #[arg(long)]
    pub pred: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Arrow query grid (defaults to rollout.grid_size)
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    /// Omit field arrows
    #[arg(long)]
    pub no_field: bool,
}

#[derive(Debug, Args)]
pub struct LossEvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Strata per axis
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = crate::supervision::DEFAULT_LAMBDA)]
    pub lambda: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::UnknownLabel { .. }
        | Error::DimensionMismatch { .. }
        | Error::LengthMismatch(..)
        | Error::Config(_)
        | Error::NotTargetable(_)
        | Error::TargetNotFound { .. }
        | Error::MalformedBox(..)
        | Error::Instruction(_)
        | Error::Format(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Image(_)
        | Error::Toml(_)
        | Error::EmptyTrajectory
        | Error::ZeroLengthReference => EXIT_INVALID,
        _ => EXIT_PIPELINE,
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
        }
    };
    if cli.global.verbose {
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
            .try_init();
    } else {
        let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
            .try_init();
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = RunConfig::load(cli.global.config.as_deref())?;
    cfg.apply_overrides(&cli.global.overrides)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.jobs)
        .build()
        .map_err(|e| usage(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Gen(a) => cmd_gen(&cfg, a),
        Command::Annotate(a) => cmd_annotate(&cfg, a),
        Command::Rollout(a) => cmd_rollout(&cfg, a),
        Command::Plan(a) => cmd_plan(&cfg, a),
        Command::Eval(a) => cmd_eval(&cfg, a),
        Command::Render(a) => cmd_render(&cfg, a),
        Command::LossEval(a) => cmd_loss_eval(a),
    })
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let bad = || usage(format!("{what} must look like \"a,b\" (got {s:?})"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(bad());
    }
    Ok((a, b))
}

fn parse_norm_point(s: &str) -> Result<NormPoint> {
    let (u, v) = parse_pair(s, "start point")?;
    if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
        return Err(usage(format!("start point ({u}, {v}) lies outside [0,1]²")));
    }
    Ok(NormPoint::new(u, v))
}

fn parse_pixel(s: &str, w: usize, h: usize) -> Result<Pixel> {
    let (x, y) = parse_pair(s, "start pixel")?;
    if x < 0.0
        || y < 0.0
        || x.fract() != 0.0
        || y.fract() != 0.0
        || x as usize >= w
        || y as usize >= h
    {
        return Err(usage(format!(
            "start pixel ({x}, {y}) is not a pixel of the {w}x{h} scene"
        )));
    }
    Ok(Pixel::new(x as usize, y as usize))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn manifest_dir(manifest: &Path) -> PathBuf {
    manifest.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Episode name used for per-entry output files.
pub fn episode_name(entry: &ManifestEntry) -> String {
    entry
        .annotation
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("ep_{:05}", entry.seed))
}

fn goal_from_args(
    args: &GoalArgs,
    map: &SemanticMap,
    mapping: &LabelMapping,
) -> Result<(GoalSpec, Option<String>)> {
    match (&args.instruction, &args.target) {
        (Some(text), None) => Ok((parse_instruction(text, map, mapping)?, Some(text.clone()))),
        (None, Some(name)) => {
            let label = mapping
                .label_by_name(name)
                .ok_or_else(|| usage(format!("unknown target name {name:?}")))?;
            Ok((
                GoalSpec {
                    target_label: label,
                    instance_index: args.instance,
                    side: args.side,
                },
                None,
            ))
        }
        _ => Err(usage("give exactly one of --instruction or --target")),
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_gen(cfg: &RunConfig, a: GenArgs) -> Result<i32> {
    let first = a.seed.unwrap_or(cfg.generator.seed);
    std::fs::create_dir_all(&a.out)?;
    let seeds: Vec<u64> = (first..first + a.count).collect();
    let results: Vec<Result<(ManifestEntry, String)>> = seeds
        .par_iter()
        .map(|&seed| {
            let spec = crate::scene::SceneSpec {
                seed,
                ..cfg.generator.clone()
            };
            let (map, mapping) = gen_scene(&spec)?;
            let name = format!("scene_{seed:05}.png");
            save_scene(&a.out.join(&name), &map, &mapping)?;
            let ins = gen_instruction(&map, &mapping, seed)?;
            let entry = ManifestEntry {
                scene: PathBuf::from(name),
                instruction: ins.text.clone(),
                goal: ins.spec,
                seed,
                annotation: PathBuf::from("annotations").join(format!("ep_{seed:05}")),
            };
            Ok((entry, serde_json::to_string(&ins)?))
        })
        .collect();
    let mut entries = Vec::new();
    let mut instructions = String::new();
    for r in results {
        let (entry, line) = r?;
        log::info!("generated {}", entry.scene.display());
        entries.push(entry);
        instructions.push_str(&line);
        instructions.push('\n');
    }
    write_atomic(&a.out.join("instructions.jsonl"), instructions.as_bytes())?;
    write_atomic(
        &a.out.join("manifest.jsonl"),
        manifest_text(&entries)?.as_bytes(),
    )?;
    println!("{}", a.out.join("manifest.jsonl").display());
    Ok(EXIT_OK)
}

/// Annotates one episode and writes its bundle.
pub fn annotate_episode(
    cfg: &RunConfig,
    scene: &Path,
    goal: GoalSpec,
    instruction: Option<String>,
    start: StartChoice,
    out: &Path,
) -> Result<AnnotationBundle> {
    let (map, mapping) = load_scene(scene)?;
    let (ann, _) = annotate_with_stages(&map, &mapping, &goal, &cfg.annotation, start)?;
    let seed = match start {
        StartChoice::Sampled { seed } => seed,
        StartChoice::Fixed(_) => 0,
    };
    let bundle = AnnotationBundle {
        field: ann.field,
        trajectory: ann.trajectory,
        meta: AnnotationMeta {
            scene: scene.to_path_buf(),
            width: map.width(),
            height: map.height(),
            seed,
            instruction,
            goal,
            goal_pixels: ann.goal_pixels,
            start: ann.start,
            config: cfg.annotation.clone(),
        },
    };
    bundle.write(out)?;
    Ok(bundle)
}

#[derive(Serialize)]
struct BatchStatus {
    episode: String,
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn report_batch(rows: Vec<BatchStatus>) -> i32 {
    let mut code = EXIT_OK;
    for r in &rows {
        if r.status != "ok" {
            code = EXIT_PIPELINE;
        }
        println!(
            "{}",
            serde_json::to_string(r).expect("plain struct serializes")
        );
    }
    code
}

fn status_of(episode: String, r: Result<()>) -> BatchStatus {
    match r {
        Ok(()) => BatchStatus {
            episode,
            status: "ok".into(),
            error: None,
        },
        Err(e) => BatchStatus {
            episode,
            status: "error".into(),
            error: Some(e.to_string()),
        },
    }
}

fn cmd_annotate(cfg: &RunConfig, a: AnnotateArgs) -> Result<i32> {
    if let Some(manifest) = &a.batch {
        let base = manifest_dir(manifest);
        let entries = read_manifest(manifest)?;
        let rows: Vec<BatchStatus> = entries
            .par_iter()
            .map(|e| {
                let r = annotate_episode(
                    cfg,
                    &resolve(&base, &e.scene),
                    e.goal,
                    Some(e.instruction.clone()),
                    StartChoice::Sampled { seed: e.seed },
                    &resolve(&base, &e.annotation),
                )
                .map(|_| ());
                status_of(episode_name(e), r)
            })
            .collect();
        return Ok(report_batch(rows));
    }
    let scene = a
        .goal
        .scene
        .as_ref()
        .ok_or_else(|| usage("--scene is required"))?;
    let out = a.out.as_ref().ok_or_else(|| usage("--out is required"))?;
    let (map, mapping) = load_scene(scene)?;
    let (goal, text) = goal_from_args(&a.goal, &map, &mapping)?;
    let start = match &a.start {
        Some(s) => StartChoice::Fixed(parse_pixel(s, map.width(), map.height())?),
        None => StartChoice::Sampled { seed: a.seed },
    };
    let bundle = annotate_episode(cfg, scene, goal, text, start, out)?;
    print_json(&bundle.meta)?;
    Ok(EXIT_OK)
}

fn rollout_cfg(
    cfg: &RunConfig,
    mode: Option<RolloutMode>,
    grid: Option<usize>,
) -> crate::rollout::RolloutConfig {
    let mut rc = cfg.rollout.clone();
    if let Some(m) = mode {
        rc.mode = m;
    }
    if let Some(g) = grid {
        rc.grid_size = g;
    }
    rc
}

fn rollout_bundle(
    bundle: &AnnotationBundle,
    start: Option<NormPoint>,
    rc: &crate::rollout::RolloutConfig,
) -> Result<Trajectory> {
    let x0 = match start {
        Some(p) => p,
        None => bundle.trajectory.first().ok_or(Error::EmptyTrajectory)?,
    };
    euler_rollout(&query_grid(&bundle.field, rc.grid_size)?, x0, rc)
}

fn cmd_rollout(cfg: &RunConfig, a: RolloutArgs) -> Result<i32> {
    let rc = rollout_cfg(cfg, a.mode, a.grid);
    rc.validate()?;
    if let Some(manifest) = &a.batch {
        let base = manifest_dir(manifest);
        let entries = read_manifest(manifest)?;
        std::fs::create_dir_all(&a.out)?;
        let rows: Vec<BatchStatus> = entries
            .par_iter()
            .map(|e| {
                let r = AnnotationBundle::read(&resolve(&base, &e.annotation))
                    .and_then(|b| rollout_bundle(&b, None, &rc))
                    .and_then(|t| {
                        write_trajectory(&a.out.join(format!("{}.json", episode_name(e))), &t)
                    });
                status_of(episode_name(e), r)
            })
            .collect();
        return Ok(report_batch(rows));
    }
    let start = a.start.as_deref().map(parse_norm_point).transpose()?;
    let traj = match (&a.field, &a.bundle) {
        (Some(f), None) => {
            let x0 = start.ok_or_else(|| usage("--start is required with --field"))?;
            euler_rollout(&query_grid(&read_flow_field(f)?, rc.grid_size)?, x0, &rc)?
        }
        (None, Some(b)) => rollout_bundle(&AnnotationBundle::read(b)?, start, &rc)?,
        _ => return Err(usage("give exactly one of --field or --bundle")),
    };
    write_trajectory(&a.out, &traj)?;
    Ok(EXIT_OK)
}

/// Planner output on disk: a trajectory, or a failure record.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct PlanFailure {
    pub failure: String,
}

fn write_plan(out: &Path, outcome: &PlanOutcome) -> Result<i32> {
    match outcome {
        PlanOutcome::Path { trajectory, .. } => {
            write_trajectory(out, trajectory)?;
            Ok(EXIT_OK)
        }
        PlanOutcome::Failure { reason } => {
            write_json(
                out,
                &PlanFailure {
                    failure: reason.clone(),
                },
            )?;
            Ok(EXIT_PLANNER_FAILURE)
        }
    }
}

fn plan_bundle(
    cfg: &RunConfig,
    bundle: &AnnotationBundle,
    dir: &Path,
    start: Option<NormPoint>,
) -> Result<PlanOutcome> {
    let (map, mapping) = load_scene(&bundle.scene_path(dir))?;
    let x0 = match start {
        Some(p) => p,
        None => bundle.trajectory.first().ok_or(Error::EmptyTrajectory)?,
    };
    plan_episode(&map, &mapping, &bundle.meta.goal, x0, &cfg.planner)
}

fn cmd_plan(cfg: &RunConfig, a: PlanArgs) -> Result<i32> {
    if let Some(manifest) = &a.batch {
        let base = manifest_dir(manifest);
        let entries = read_manifest(manifest)?;
        std::fs::create_dir_all(&a.out)?;
        let rows: Vec<BatchStatus> = entries
            .par_iter()
            .map(|e| {
                let dir = resolve(&base, &e.annotation);
                let out = a.out.join(format!("{}.json", episode_name(e)));
                match AnnotationBundle::read(&dir).and_then(|b| plan_bundle(cfg, &b, &dir, None)) {
                    Ok(outcome) => {
                        let r = write_plan(&out, &outcome);
                        let mut s = status_of(episode_name(e), r.map(|_| ()));
                        if let PlanOutcome::Failure { reason } = outcome {
                            s.status = "planner_failure".into();
                            s.error = Some(reason);
                        }
                        s
                    }
                    Err(err) => status_of(episode_name(e), Err(err)),
                }
            })
            .collect();
        // planner failures are data; only hard errors change the exit code
        let code = if rows.iter().any(|r| r.status == "error") {
            EXIT_PIPELINE
        } else {
            EXIT_OK
        };
        for r in &rows {
            println!("{}", serde_json::to_string(r)?);
        }
        return Ok(code);
    }
    let start = a.start.as_deref().map(parse_norm_point).transpose()?;
    let outcome = match &a.bundle {
        Some(dir) => plan_bundle(cfg, &AnnotationBundle::read(dir)?, dir, start)?,
        None => {
            let scene = a
                .goal
                .scene
                .as_ref()
                .ok_or_else(|| usage("--scene or --bundle is required"))?;
            let (map, mapping) = load_scene(scene)?;
            let (goal, _) = goal_from_args(&a.goal, &map, &mapping)?;
            let x0 = start.ok_or_else(|| usage("--start is required with --scene"))?;
            plan_episode(&map, &mapping, &goal, x0, &cfg.planner)?
        }
    };
    if let PlanOutcome::Failure { reason } = &outcome {
        eprintln!("planner failure: {reason}");
    }
    write_plan(&a.out, &outcome)
}

/// One row of an evaluation table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub episode: String,
    pub status: String,
    #[serde(flatten)]
    pub report: Option<MetricsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

enum Prediction {
    Path(Trajectory),
    PlannerFailure(String),
}

fn read_prediction(path: &Path) -> Result<Prediction> {
    let value: serde_json::Value = read_json(path)?;
    if let Ok(f) = serde_json::from_value::<PlanFailure>(value) {
        return Ok(Prediction::PlannerFailure(f.failure));
    }
    Ok(Prediction::Path(read_trajectory(path)?))
}

/// Scores a prediction file against a bundle. A planner-failure record
/// yields a row without metrics.
pub fn evaluate_prediction(
    episode: String,
    pred: &Path,
    bundle_dir: &Path,
    scene: Option<&Path>,
    pred_field: Option<&Path>,
) -> Result<EvalRow> {
    let bundle = AnnotationBundle::read(bundle_dir)?;
    let traj = match read_prediction(pred)? {
        Prediction::Path(t) => t,
        Prediction::PlannerFailure(reason) => {
            return Ok(EvalRow {
                episode: episode.clone(),
                status: "planner_failure".into(),
                report: None,
                error: Some(reason),
            })
        }
    };
    let scene_path = scene
        .map(Path::to_path_buf)
        .unwrap_or_else(|| bundle.scene_path(bundle_dir));
    let (map, mapping) = load_scene(&scene_path)?;
    let obstacles = extract_free(&map, &mapping)?.negated();
    let ep = evaluate_episode(&traj, &bundle.trajectory, &obstacles)?;
    let fm = match pred_field {
        Some(p) => Some(field_metrics(&read_flow_field(p)?, &bundle.field)?),
        None => None,
    };
    Ok(EvalRow {
        episode: episode.clone(),
        status: "ok".into(),
        report: Some(MetricsReport::new(ep, fm)),
        error: None,
    })
}

/// Like [`evaluate_prediction`], with errors recorded in the row.
pub fn evaluate_files(
    episode: String,
    pred: &Path,
    bundle_dir: &Path,
    scene: Option<&Path>,
    pred_field: Option<&Path>,
) -> EvalRow {
    evaluate_prediction(episode.clone(), pred, bundle_dir, scene, pred_field).unwrap_or_else(|e| {
        EvalRow {
            episode,
            status: "error".into(),
            report: None,
            error: Some(e.to_string()),
        }
    })
}

pub const CSV_HEADER: &str = "episode,status,fge,cr,curv,plr,ae,me,error";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_row(row: &EvalRow) -> String {
    let num = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let r = row.report.as_ref();
    [
        csv_field(&row.episode),
        row.status.clone(),
        num(r.map(|r| r.fge)),
        num(r.map(|r| r.cr)),
        num(r.map(|r| r.curv)),
        num(r.map(|r| r.plr)),
        num(r.and_then(|r| r.ae)),
        num(r.and_then(|r| r.me)),
        csv_field(row.error.as_deref().unwrap_or("")),
    ]
    .join(",")
}

pub fn csv_table(rows: &[EvalRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

fn cmd_eval(_cfg: &RunConfig, a: EvalArgs) -> Result<i32> {
    if let Some(manifest) = &a.batch {
        let base = manifest_dir(manifest);
        let pred_dir = a.pred_dir.as_ref().expect("clap requires --pred-dir");
        let entries = read_manifest(manifest)?;
        let rows: Vec<EvalRow> = entries
            .par_iter()
            .map(|e| {
                let name = episode_name(e);
                evaluate_files(
                    name.clone(),
                    &pred_dir.join(format!("{name}.json")),
                    &resolve(&base, &e.annotation),
                    a.scene.as_deref(),
                    None,
                )
            })
            .collect();
        if let Some(csv) = &a.csv {
            write_atomic(csv, csv_table(&rows).as_bytes())?;
        }
        match &a.out {
            Some(out) => write_json(out, &rows)?,
            None => print_json(&rows)?,
        }
        return Ok(EXIT_OK);
    }
    let pred = a.pred.as_ref().ok_or_else(|| usage("--pred is required"))?;
    let bundle = a
        .bundle
        .as_ref()
        .ok_or_else(|| usage("--bundle is required"))?;
    let name = bundle
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let row = evaluate_prediction(
        name,
        pred,
        bundle,
        a.scene.as_deref(),
        a.pred_field.as_deref(),
    )?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, csv_table(std::slice::from_ref(&row)).as_bytes())?;
    }
    match &row.report {
        Some(report) => {
            match &a.out {
                Some(out) => write_json(out, report)?,
                None => print_json(report)?,
            }
            Ok(EXIT_OK)
        }
        None => {
            print_json(&row)?;
            Ok(EXIT_PLANNER_FAILURE)
        }
    }
}

fn cmd_render(cfg: &RunConfig, a: RenderArgs) -> Result<i32> {
    let bundle = AnnotationBundle::read(&a.bundle)?;
    let (map, mapping) = load_scene(&bundle.scene_path(&a.bundle))?;
    let pred = a.pred.as_deref().map(read_trajectory).transpose()?;
    let overlay = Overlay {
        field: (!a.no_field).then_some(&bundle.field),
        annotated: Some(&bundle.trajectory),
        predicted: pred.as_ref(),
        goal_pixels: &bundle.meta.goal_pixels,
    };
    let opts = RenderOptions {
        grid_size: a.grid.unwrap_or(cfg.rollout.grid_size),
        stride: a.stride,
    };
    write_atomic(
        &a.out,
        render_svg(&map, &mapping, &overlay, &opts)?.as_bytes(),
    )?;
    Ok(EXIT_OK)
}

fn cmd_loss_eval(a: LossEvalArgs) -> Result<i32> {
    let pred = read_flow_field(&a.pred)?;
    let target = read_flow_field(&a.target)?;
    let report = evaluate_losses(&pred, &target, a.grid, a.samples, a.lambda, a.seed)?;
    match &a.out {
        Some(out) => write_json(out, &report)?,
        None => print_json(&report)?,
    }
    Ok(EXIT_OK)
}
