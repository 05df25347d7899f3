//! Command-line surface: reproducible batch pipelines over scene
//! directories, label files, and model files. Every output-producing run
//! writes a [`RunManifest`] next to its output; `rerun --manifest F`
//! replays a recorded invocation.
//!
//! All user-facing angles are radians (source annotations using degrees are
//! converted at ingestion only). Seeds are mandatory for stochastic
//! subcommands — there is no implicit time-based seeding.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dataset::{
    emit_records, load_scene, parse_records, relabel_scene, scan_scene_dir, synth_scene,
    write_scene, GraspRecord, SceneSample, SynthConfig,
};
use crate::embedding::{embed, read_model, write_model, ModelMeta, TrainConfig};
use crate::eval::{
    ablation_run, build_mining_samples, emit_report, evaluate_success_rate, train_bundle,
    AblationVariant,
};
use crate::graspability::RuleConfig;
use crate::gripper::{load_gripper_spec, make_action_grid, render_grid, GripperSpec};
use crate::manifest::{manifest_path, RunManifest};
use crate::pgm;
use crate::planner::{
    plan_batch, plan_json_line, Grasp, ModelBundle, PlanConfig, PlanMode, PlanResult,
};

const VERSION_LINE: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (formats: GLW1, records-jsonl-1)"
);

const DEFAULT_TRIPLETS: usize = 2000;

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Runtime(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Runtime(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(name = "graspkit", version = VERSION_LINE, disable_help_subcommand = true)]
struct Cli {
    /// Emit machine-readable error JSON on stderr instead of plain text.
    #[arg(long, global = true)]
    json_errors: bool,
    /// Worker threads for scene/action parallelism (default: all cores).
    /// Output bytes are identical for any thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Gripper inspection utilities.
    Gripper {
        #[command(subcommand)]
        cmd: GripperCmd,
    },
    /// Generate a deterministic synthetic scene corpus.
    Synth(SynthArgs),
    /// Relabel a scene corpus for a gripper (mask+path rule labels).
    Relabel(RelabelArgs),
    /// Affine embedding training and export.
    Awp {
        #[command(subcommand)]
        cmd: AwpCmd,
    },
    /// Plan one grasp per scene.
    Plan(PlanArgs),
    /// Score a plan file against the rule oracle.
    Eval(EvalArgs),
    /// Train one model per dataset variant and compare held-out success.
    Ablate(AblateArgs),
    /// Replay a recorded run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Subcommand)]
enum GripperCmd {
    /// Render the action grid of a gripper spec as PGM mask/path pairs.
    Render(GripperRenderArgs),
}

#[derive(Args)]
struct GripperRenderArgs {
    /// Gripper spec file (.gspec).
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 16)]
    na: usize,
    #[arg(long, default_value_t = 8)]
    nw: usize,
    /// Crop size in pixels (square).
    #[arg(long, default_value_t = 96)]
    size: u32,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of scenes.
    #[arg(long)]
    n: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RelabelArgs {
    /// Scene directory (<id>_mask.pgm / <id>_grasps.txt).
    #[arg(long)]
    scenes: PathBuf,
    /// Gripper spec file.
    #[arg(long)]
    gripper: PathBuf,
    #[arg(long, default_value_t = 96)]
    crop: u32,
    /// Stability threshold (px).
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    #[arg(long, default_value_t = 16)]
    na: usize,
    #[arg(long, default_value_t = 8)]
    nw: usize,
    /// Keep only success records.
    #[arg(long)]
    success_only: bool,
    /// Output JSONL file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum AwpCmd {
    Train(AwpTrainArgs),
    ExportEmbeddings(AwpExportArgs),
}

#[derive(Args)]
struct AwpTrainArgs {
    /// Label records (JSONL from `relabel`).
    #[arg(long)]
    labels: PathBuf,
    /// Scene directory the labels refer to (for descriptor rendering).
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    gripper: PathBuf,
    /// Output model file; metadata goes to <out>.meta.json.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    margin: f64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = DEFAULT_TRIPLETS)]
    triplets: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 96)]
    crop: u32,
}

#[derive(Args)]
struct AwpExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    gripper: PathBuf,
    /// Output CSV of per-record embeddings.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 96)]
    crop: u32,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    scene_dir: PathBuf,
    #[arg(long)]
    gripper: PathBuf,
    /// oracle | awp
    #[arg(long)]
    mode: String,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    #[arg(long, default_value_t = 96)]
    crop: u32,
    #[arg(long, default_value_t = 16)]
    na: usize,
    #[arg(long, default_value_t = 8)]
    nw: usize,
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Plan JSONL file.
    #[arg(long)]
    plans: PathBuf,
    #[arg(long)]
    scenes: PathBuf,
    #[arg(long)]
    gripper: PathBuf,
    #[arg(long, default_value_t = 96)]
    crop: u32,
    #[arg(long, default_value_t = 10.0)]
    tau: f64,
    /// Output CSV report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    /// Comma-separated label JSONL files, one per variant.
    #[arg(long, value_delimiter = ',')]
    variants: Vec<PathBuf>,
    /// Evaluation gripper spec.
    #[arg(long)]
    gripper: PathBuf,
    /// Extra gripper spec files for rendering multi-gripper label variants.
    #[arg(long, value_delimiter = ',')]
    train_grippers: Vec<PathBuf>,
    /// Training scene directory the variant labels refer to.
    #[arg(long)]
    scenes: PathBuf,
    /// Held-out scene directory.
    #[arg(long)]
    holdout: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = DEFAULT_TRIPLETS)]
    triplets: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
}

pub fn run(args: Vec<String>) -> i32 {
    let mut argv = vec!["graspkit".to_string()];
    argv.extend(args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{e}");
            return 2;
        }
    };
    if let Some(t) = cli.threads {
        // The global pool can only be built once per process; later calls
        // (e.g. via rerun) keep the first configuration.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            if cli.json_errors {
                eprintln!(
                    "{{\"error\":{},\"code\":{}}}",
                    serde_json::to_string(e.message()).unwrap(),
                    e.code()
                );
            } else {
                eprintln!("error: {}", e.message());
            }
            e.code()
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Gripper {
            cmd: GripperCmd::Render(a),
        } => gripper_render(a),
        Cmd::Synth(a) => synth(a),
        Cmd::Relabel(a) => relabel(a),
        Cmd::Awp {
            cmd: AwpCmd::Train(a),
        } => awp_train(a),
        Cmd::Awp {
            cmd: AwpCmd::ExportEmbeddings(a),
        } => awp_export(a),
        Cmd::Plan(a) => plan_cmd(a),
        Cmd::Eval(a) => eval_cmd(a),
        Cmd::Ablate(a) => ablate_cmd(a),
        Cmd::Rerun(a) => rerun_cmd(a),
    }
}

fn input_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Input(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

fn read_spec(path: &Path) -> Result<GripperSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    load_gripper_spec(&text).map_err(input_err)
}

fn load_scene_corpus(dir: &Path) -> Result<Vec<SceneSample>, CliError> {
    let ids = scan_scene_dir(dir).map_err(input_err)?;
    ids.iter()
        .map(|id| load_scene(dir, id).map_err(input_err))
        .collect()
}

fn list_dir_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(input_err)? {
        let p = entry.map_err(input_err)?.path();
        if p.is_file() && !p.to_string_lossy().ends_with(".manifest.json") {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

fn kv(pairs: &[(&str, String)]) -> Vec<(String, String)> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn emit_manifest(
    command: &str,
    args: &[(&str, String)],
    seed: u64,
    inputs: &[PathBuf],
    out: &Path,
) -> Result<(), CliError> {
    let m = RunManifest::new(command, &kv(args), seed, inputs).map_err(runtime_err)?;
    m.write(&manifest_path(out)).map_err(runtime_err)
}

fn path_arg(p: &Path) -> String {
    p.display().to_string()
}

fn gripper_render(a: GripperRenderArgs) -> Result<(), CliError> {
    let spec = read_spec(&a.spec)?;
    let grid = make_action_grid(&spec, a.na, a.nw);
    fs::create_dir_all(&a.out).map_err(runtime_err)?;
    let rendered = render_grid(&spec, &grid, a.size);
    for ((j, k, _, _), r) in grid.iter().zip(rendered) {
        let action = match r {
            Ok(action) => action,
            Err(crate::gripper::GripperError::GripperOutOfFrame) => continue,
            Err(e) => return Err(runtime_err(e)),
        };
        for (tag, raster) in [("mask", &action.mask), ("path", &action.path)] {
            let path = a.out.join(format!("a{j:02}_w{k:02}_{tag}.pgm"));
            let f = fs::File::create(&path).map_err(runtime_err)?;
            pgm::write_raster(raster, BufWriter::new(f)).map_err(runtime_err)?;
        }
    }
    emit_manifest(
        "gripper render",
        &[
            ("spec", path_arg(&a.spec)),
            ("na", a.na.to_string()),
            ("nw", a.nw.to_string()),
            ("size", a.size.to_string()),
            ("out", path_arg(&a.out)),
        ],
        0,
        &[a.spec.clone()],
        &a.out,
    )
}

fn synth(a: SynthArgs) -> Result<(), CliError> {
    fs::create_dir_all(&a.out).map_err(runtime_err)?;
    let cfg = SynthConfig::default();
    for i in 0..a.n {
        let scene = synth_scene(a.seed.wrapping_add(i), &cfg);
        write_scene(&a.out, &scene).map_err(runtime_err)?;
    }
    emit_manifest(
        "synth",
        &[
            ("n", a.n.to_string()),
            ("seed", a.seed.to_string()),
            ("out", path_arg(&a.out)),
        ],
        a.seed,
        &[],
        &a.out,
    )
}

fn relabel(a: RelabelArgs) -> Result<(), CliError> {
    let spec = read_spec(&a.gripper)?;
    let grid = make_action_grid(&spec, a.na, a.nw);
    let rule = RuleConfig { tau_stable: a.tau };
    let scenes = load_scene_corpus(&a.scenes)?;
    let mut records = Vec::new();
    for scene in &scenes {
        records.extend(
            relabel_scene(scene, &spec, &grid, &rule, a.crop).map_err(runtime_err)?,
        );
    }
    if a.success_only {
        records.retain(|r| r.success);
    }
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    emit_records(&records, BufWriter::new(f)).map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scenes)?;
    inputs.push(a.gripper.clone());
    let mut args = vec![
        ("scenes", path_arg(&a.scenes)),
        ("gripper", path_arg(&a.gripper)),
        ("crop", a.crop.to_string()),
        ("tau", a.tau.to_string()),
        ("na", a.na.to_string()),
        ("nw", a.nw.to_string()),
        ("out", path_arg(&a.out)),
    ];
    if a.success_only {
        args.push(("success-only", String::new()));
    }
    emit_manifest("relabel", &args, 0, &inputs, &a.out)
}

fn read_labels(path: &Path) -> Result<Vec<GraspRecord>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_records(std::io::BufReader::new(f)).map_err(input_err)
}

fn scene_map(dir: &Path) -> Result<BTreeMap<String, SceneSample>, CliError> {
    Ok(load_scene_corpus(dir)?
        .into_iter()
        .map(|s| (s.scene_id.clone(), s))
        .collect())
}

fn awp_train(a: AwpTrainArgs) -> Result<(), CliError> {
    let spec = read_spec(&a.gripper)?;
    let records = read_labels(&a.labels)?;
    let scenes = scene_map(&a.scenes)?;
    let mut specs = BTreeMap::new();
    specs.insert(spec.id.clone(), spec.clone());
    let samples =
        build_mining_samples(&records, &scenes, &specs, a.crop).map_err(runtime_err)?;
    let cfg = TrainConfig {
        margin: a.margin,
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch,
        seed: a.seed,
    };
    let (bundle, _) =
        train_bundle(&samples, a.triplets, &cfg, Some(spec.id.clone())).map_err(runtime_err)?;
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    write_model(&bundle.model, BufWriter::new(f)).map_err(runtime_err)?;
    let meta = ModelMeta {
        gripper_id: spec.id.clone(),
        margin: a.margin,
        seed: a.seed,
        epochs: a.epochs,
        mu_pos: bundle.mu_pos,
        mu_neg: bundle.mu_neg,
    };
    let mut meta_text = serde_json::to_string_pretty(&meta).map_err(runtime_err)?;
    meta_text.push('\n');
    fs::write(meta_json_path(&a.out), meta_text).map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scenes)?;
    inputs.push(a.labels.clone());
    inputs.push(a.gripper.clone());
    emit_manifest(
        "awp train",
        &[
            ("labels", path_arg(&a.labels)),
            ("scenes", path_arg(&a.scenes)),
            ("gripper", path_arg(&a.gripper)),
            ("out", path_arg(&a.out)),
            ("margin", a.margin.to_string()),
            ("lr", a.lr.to_string()),
            ("epochs", a.epochs.to_string()),
            ("batch", a.batch.to_string()),
            ("triplets", a.triplets.to_string()),
            ("seed", a.seed.to_string()),
            ("crop", a.crop.to_string()),
        ],
        a.seed,
        &inputs,
        &a.out,
    )
}

fn meta_json_path(model: &Path) -> PathBuf {
    let mut name = model
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".to_string());
    name.push_str(".meta.json");
    model.with_file_name(name)
}

fn read_bundle(model_path: &Path) -> Result<ModelBundle, CliError> {
    let f = fs::File::open(model_path)
        .map_err(|e| CliError::Input(format!("{}: {e}", model_path.display())))?;
    let model = read_model(std::io::BufReader::new(f)).map_err(input_err)?;
    let meta_text = fs::read_to_string(meta_json_path(model_path)).map_err(input_err)?;
    let meta: ModelMeta = serde_json::from_str(&meta_text).map_err(input_err)?;
    Ok(ModelBundle {
        model,
        mu_pos: meta.mu_pos,
        mu_neg: meta.mu_neg,
        gripper_id: Some(meta.gripper_id),
    })
}

fn awp_export(a: AwpExportArgs) -> Result<(), CliError> {
    let spec = read_spec(&a.gripper)?;
    let bundle = read_bundle(&a.model)?;
    let records = read_labels(&a.labels)?;
    let scenes = scene_map(&a.scenes)?;
    let mut specs = BTreeMap::new();
    specs.insert(spec.id.clone(), spec.clone());
    let samples =
        build_mining_samples(&records, &scenes, &specs, a.crop).map_err(runtime_err)?;
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    let mut w = BufWriter::new(f);
    let d_out = bundle.model.d_out;
    let mut header = String::from("scene_id,x,y,success");
    for i in 0..d_out {
        header.push_str(&format!(",e{i}"));
    }
    writeln!(w, "{header}").map_err(runtime_err)?;
    for s in &samples {
        let e = embed(&bundle.model, &s.descriptor).map_err(runtime_err)?;
        let mut line = format!(
            "{},{:.6},{:.6},{}",
            s.scene_id,
            s.x,
            s.y,
            if s.success { 1 } else { 0 }
        );
        for v in e {
            line.push_str(&format!(",{v:.9}"));
        }
        writeln!(w, "{line}").map_err(runtime_err)?;
    }
    w.flush().map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scenes)?;
    inputs.extend([a.model.clone(), meta_json_path(&a.model), a.labels.clone(), a.gripper.clone()]);
    emit_manifest(
        "awp export-embeddings",
        &[
            ("model", path_arg(&a.model)),
            ("labels", path_arg(&a.labels)),
            ("scenes", path_arg(&a.scenes)),
            ("gripper", path_arg(&a.gripper)),
            ("crop", a.crop.to_string()),
            ("out", path_arg(&a.out)),
        ],
        0,
        &inputs,
        &a.out,
    )
}

fn parse_mode(s: &str) -> Result<PlanMode, CliError> {
    match s {
        "oracle" => Ok(PlanMode::Oracle),
        "awp" => Ok(PlanMode::Awp),
        other => Err(CliError::Usage(format!(
            "--mode must be oracle or awp, got {other:?}"
        ))),
    }
}

fn plan_cmd(a: PlanArgs) -> Result<(), CliError> {
    let mode = parse_mode(&a.mode)?;
    let spec = read_spec(&a.gripper)?;
    let scenes = load_scene_corpus(&a.scene_dir)?;
    let bundle = match (&mode, &a.model) {
        (PlanMode::Awp, Some(p)) => Some(read_bundle(p)?),
        (PlanMode::Awp, None) => {
            return Err(CliError::Usage("--mode awp requires --model".into()))
        }
        (PlanMode::Oracle, _) => None,
    };
    let cfg = PlanConfig {
        mode,
        top_k_points: a.top_k,
        crop: a.crop,
        na: a.na,
        nw: a.nw,
        rule: RuleConfig { tau_stable: a.tau },
    };
    let results = plan_batch(&scenes, &spec, &cfg, bundle.as_ref());
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    let mut w = BufWriter::new(f);
    for r in &results {
        writeln!(w, "{}", plan_json_line(r, &spec.id, mode)).map_err(runtime_err)?;
    }
    w.flush().map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scene_dir)?;
    inputs.push(a.gripper.clone());
    if let Some(m) = &a.model {
        inputs.push(m.clone());
        inputs.push(meta_json_path(m));
    }
    let mut args = vec![
        ("scene-dir", path_arg(&a.scene_dir)),
        ("gripper", path_arg(&a.gripper)),
        ("mode", a.mode.clone()),
        ("top-k", a.top_k.to_string()),
        ("crop", a.crop.to_string()),
        ("na", a.na.to_string()),
        ("nw", a.nw.to_string()),
        ("tau", a.tau.to_string()),
        ("out", path_arg(&a.out)),
    ];
    if let Some(m) = &a.model {
        args.push(("model", path_arg(m)));
    }
    emit_manifest("plan", &args, 0, &inputs, &a.out)
}

fn parse_plan_lines(text: &str) -> Result<Vec<PlanResult>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::Input(format!("plan line {}: {e}", i + 1)))?;
        let scene_id = v
            .get("scene_id")
            .and_then(|s| s.as_str())
            .ok_or_else(|| CliError::Input(format!("plan line {}: missing scene_id", i + 1)))?
            .to_string();
        let elapsed_ms = v.get("elapsed_ms").and_then(|x| x.as_f64()).unwrap_or(0.0);
        let grasp = match v.get("x").and_then(|x| x.as_f64()) {
            Some(x) => {
                let get = |k: &str| -> Result<f64, CliError> {
                    v.get(k).and_then(|x| x.as_f64()).ok_or_else(|| {
                        CliError::Input(format!("plan line {}: missing {k}", i + 1))
                    })
                };
                Some(Grasp {
                    x,
                    y: get("y")?,
                    theta: get("theta")?,
                    width: get("width")?,
                    quality: get("quality")?,
                    score: get("score")?,
                })
            }
            None => None,
        };
        out.push(PlanResult {
            scene_id,
            grasp,
            error: None,
            elapsed_ms,
        });
    }
    Ok(out)
}

fn eval_cmd(a: EvalArgs) -> Result<(), CliError> {
    let spec = read_spec(&a.gripper)?;
    let text = fs::read_to_string(&a.plans)
        .map_err(|e| CliError::Input(format!("{}: {e}", a.plans.display())))?;
    let results = parse_plan_lines(&text)?;
    let scenes: Vec<SceneSample> = results
        .iter()
        .map(|r| load_scene(&a.scenes, &r.scene_id).map_err(input_err))
        .collect::<Result<_, _>>()?;
    let rule = RuleConfig { tau_stable: a.tau };
    let report = evaluate_success_rate(&results, &scenes, &spec, &rule, a.crop)
        .map_err(runtime_err)?;
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    emit_report(&[report], BufWriter::new(f)).map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scenes)?;
    inputs.extend([a.plans.clone(), a.gripper.clone()]);
    emit_manifest(
        "eval",
        &[
            ("plans", path_arg(&a.plans)),
            ("scenes", path_arg(&a.scenes)),
            ("gripper", path_arg(&a.gripper)),
            ("crop", a.crop.to_string()),
            ("tau", a.tau.to_string()),
            ("out", path_arg(&a.out)),
        ],
        0,
        &inputs,
        &a.out,
    )
}

fn ablate_cmd(a: AblateArgs) -> Result<(), CliError> {
    if a.variants.is_empty() {
        return Err(CliError::Usage("--variants needs at least one file".into()));
    }
    let eval_spec = read_spec(&a.gripper)?;
    let mut specs = BTreeMap::new();
    specs.insert(eval_spec.id.clone(), eval_spec.clone());
    for p in &a.train_grippers {
        let s = read_spec(p)?;
        specs.insert(s.id.clone(), s);
    }
    let mut variants = Vec::new();
    for p in &a.variants {
        let name = p
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| p.display().to_string());
        variants.push(AblationVariant {
            name,
            records: read_labels(p)?,
        });
    }
    let train_scenes = scene_map(&a.scenes)?;
    let holdout = load_scene_corpus(&a.holdout)?;
    let train_cfg = TrainConfig {
        epochs: a.epochs,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let reports = ablation_run(
        &variants,
        &train_scenes,
        &specs,
        &[eval_spec],
        &holdout,
        &PlanConfig::default(),
        &train_cfg,
        a.triplets,
    )
    .map_err(runtime_err)?;
    let f = fs::File::create(&a.out).map_err(runtime_err)?;
    emit_report(&reports, BufWriter::new(f)).map_err(runtime_err)?;
    let mut inputs = list_dir_files(&a.scenes)?;
    inputs.extend(list_dir_files(&a.holdout)?);
    inputs.extend(a.variants.iter().cloned());
    inputs.push(a.gripper.clone());
    inputs.extend(a.train_grippers.iter().cloned());
    let variant_list = a
        .variants
        .iter()
        .map(|p| p.display().to_string())
        .collect::<Vec<_>>()
        .join(",");
    let mut args = vec![
        ("variants", variant_list),
        ("gripper", path_arg(&a.gripper)),
        ("scenes", path_arg(&a.scenes)),
        ("holdout", path_arg(&a.holdout)),
        ("seed", a.seed.to_string()),
        ("epochs", a.epochs.to_string()),
        ("triplets", a.triplets.to_string()),
        ("out", path_arg(&a.out)),
    ];
    if !a.train_grippers.is_empty() {
        let list = a
            .train_grippers
            .iter()
            .map(|p| p.display().to_string())
            .collect::<Vec<_>>()
            .join(",");
        args.push(("train-grippers", list));
    }
    emit_manifest("ablate", &args, a.seed, &inputs, &a.out)
}

fn rerun_cmd(a: RerunArgs) -> Result<(), CliError> {
    let m = RunManifest::read(&a.manifest).map_err(input_err)?;
    m.verify_inputs().map_err(input_err)?;
    let argv = m.to_argv();
    let cli = Cli::try_parse_from(std::iter::once("graspkit".to_string()).chain(argv))
        .map_err(|e| CliError::Input(format!("manifest argv invalid: {e}")))?;
    dispatch(cli.cmd)
}
