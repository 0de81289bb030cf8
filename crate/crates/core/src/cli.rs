//! Command-line front end. Every subcommand echoes its parsed arguments:
//! JSON results carry them under `"args"`, CSV outputs start with a
//! `# vnl <command> <args-json>` line.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use vnl::io::{self, DepthFormat, PlyMode};
use vnl::losses::vn_loss_grad;
use vnl::metrics::{depth_metrics_with, normal_metrics, DepthEvalOptions, DepthMetricsReport, NormalMetricsReport};
use vnl::noise_lab::{vn_sn_robustness, NoiseConfig};
use vnl::refine::{evaluate_refinement, refine_depth_traced, RefineConfig, RefineError};
use vnl::sampling::{sample_triplets_with_threads, SamplingConfig};
use vnl::scene::{synthesize_scene, SceneSpec};
use vnl::{backproject_map, estimate_normal_map, patch_size_sensitivity, CameraIntrinsics, DepthMap, Error};

pub enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Configuration errors are reported as usage errors.
fn usage<T>(r: vnl::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure::Usage(e.to_string()))
}

#[derive(Parser, Debug)]
#[command(name = "vnl", version, about = "Virtual-normal geometry toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lift a depth map to a PLY point cloud.
    Backproject(BackprojectArgs),
    /// Estimate plane-fit surface normals and write them as a 3-channel PFM.
    Normals(NormalsArgs),
    /// Sample virtual-normal triplets from a ground-truth depth map.
    Sample(SampleArgs),
    /// Evaluate the virtual-normal loss between two depth maps.
    VnLoss(VnLossArgs),
    /// Depth metrics of a prediction against ground truth.
    EvalDepth(EvalDepthArgs),
    /// Angular metrics between two normal maps (3-channel PFM).
    EvalNormals(EvalNormalsArgs),
    /// Virtual versus surface normal robustness on a noisy sphere.
    NoiseLab(NoiseLabArgs),
    /// Mean angular difference between normal maps of different patch sizes.
    PatchSensitivity(PatchSensitivityArgs),
    /// Refine a depth map by gradient descent on L1 plus the VN loss.
    Refine(RefineArgs),
    /// Render a synthetic scene description to depth and normal maps.
    Synth(SynthArgs),
}

#[derive(Args, Debug, Serialize)]
struct DepthInput {
    /// Camera intrinsics JSON (fx, fy, u0, v0, depth_scale).
    #[arg(long)]
    intrinsics: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BackprojectArgs {
    depth: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Write ASCII instead of binary little-endian.
    #[arg(long)]
    ascii: bool,
    /// Attach plane-fit normals with this patch half-size.
    #[arg(long)]
    normals_half_size: Option<usize>,
}

#[derive(Args, Debug, Serialize)]
struct NormalsArgs {
    depth: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    #[arg(long, default_value_t = 1)]
    patch_half_size: usize,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the oriented point cloud.
    #[arg(long)]
    ply: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SamplingArgs {
    #[arg(long, default_value_t = SamplingConfig::DEFAULT_ALPHA_DEG)]
    alpha: f64,
    #[arg(long, default_value_t = SamplingConfig::DEFAULT_BETA_DEG)]
    beta: f64,
    #[arg(long, default_value_t = SamplingConfig::DEFAULT_THETA_M)]
    theta: f64,
    #[arg(long, default_value_t = SamplingConfig::DEFAULT_ATTEMPTS)]
    max_attempts: u32,
}

impl SamplingArgs {
    fn config(&self, n_groups: usize, seed: u64) -> SamplingConfig {
        SamplingConfig {
            n_groups,
            alpha_deg: self.alpha,
            beta_deg: self.beta,
            theta_m: self.theta,
            seed,
            max_attempts_per_group: self.max_attempts,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SampleArgs {
    gt: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long)]
    seed: u64,
    /// Worker threads; does not affect the output.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    threads: usize,
    /// CSV destination; stdout when absent.
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct VnLossArgs {
    pred: PathBuf,
    gt: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    /// Triplet CSV; when absent triplets are sampled with --n and --seed.
    #[arg(long, conflicts_with = "seed")]
    triplets: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, required_unless_present = "triplets")]
    seed: Option<u64>,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 1.0)]
    ohem_keep: f64,
    /// Write dL/dd as a 1-channel PFM.
    #[arg(long)]
    grad: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct EvalDepthArgs {
    pred: PathBuf,
    gt: PathBuf,
    #[command(flatten)]
    input: DepthInput,
    /// Ignore ground-truth pixels deeper than this.
    #[arg(long)]
    max_depth: Option<f64>,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug, Serialize)]
struct EvalNormalsArgs {
    pred: PathBuf,
    gt: PathBuf,
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Debug, Serialize)]
struct NoiseLabArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.0002,0.001,0.003,0.01")]
    sigmas: Vec<f64>,
    #[arg(long, default_value_t = 100_000)]
    n_groups: usize,
    #[arg(long, default_value_t = 100_000)]
    n_points: usize,
    #[arg(long, default_value_t = 100_000)]
    cloud_points: usize,
    #[arg(long, default_value_t = 16)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(short, long)]
    #[serde(skip)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct PatchSensitivityArgs {
    depth: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
    sizes: Vec<usize>,
}

#[derive(Args, Debug, Serialize)]
struct RefineArgs {
    init: PathBuf,
    gt: PathBuf,
    #[arg(long)]
    intrinsics: PathBuf,
    #[arg(long, default_value_t = vnl::losses::DEFAULT_LAMBDA_VN)]
    lambda: f64,
    #[arg(long, default_value_t = RefineConfig::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = RefineConfig::STABLE_STEP_SIZE)]
    lr: f64,
    #[arg(long, default_value_t = 20_000)]
    n_triplets: usize,
    #[arg(long, default_value_t = 1.0)]
    ohem_keep: f64,
    #[arg(long)]
    seed: u64,
    /// Patch half-size for the normal evaluation.
    #[arg(long, default_value_t = 1)]
    patch_half_size: usize,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct SynthArgs {
    spec: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Backproject(a) => backproject(a),
        Command::Normals(a) => normals(a),
        Command::Sample(a) => sample(a),
        Command::VnLoss(a) => vn_loss(a),
        Command::EvalDepth(a) => eval_depth(a),
        Command::EvalNormals(a) => eval_normals(a),
        Command::NoiseLab(a) => noise_lab(a),
        Command::PatchSensitivity(a) => patch_sensitivity(a),
        Command::Refine(a) => refine(a),
        Command::Synth(a) => synth(a),
    }
}

fn load_k(path: &Path) -> CliResult<CameraIntrinsics> {
    Ok(io::read_intrinsics(path)?)
}

fn load_depth(path: &Path, k: Option<&CameraIntrinsics>) -> CliResult<DepthMap> {
    let format = DepthFormat::from_path(path)
        .ok_or_else(|| Failure::Usage(format!("{}: expected a .pfm or .png depth file", path.display())))?;
    let k = match (format, k) {
        (DepthFormat::Png16, None) => {
            return Err(Failure::Usage("PNG depth needs --intrinsics for its depth scale".into()));
        }
        (_, Some(k)) => *k,
        (DepthFormat::Pfm, None) => CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 1.0)?,
    };
    Ok(io::read_depth(path, format, &k)?)
}

fn emit_json(command: &str, args: &impl Serialize, result: serde_json::Value) -> CliResult {
    let line = json!({ "command": command, "args": args, "result": result });
    println!("{}", serde_json::to_string(&line).map_err(Error::from)?);
    Ok(())
}

fn csv_echo(command: &str, args: &impl Serialize) -> CliResult<String> {
    Ok(format!("# vnl {command} {}\n", serde_json::to_string(args).map_err(Error::from)?))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn backproject(a: BackprojectArgs) -> CliResult {
    let k = load_k(&a.intrinsics)?;
    let depth = load_depth(&a.depth, Some(&k))?;
    let cloud = backproject_map(&depth, &k);
    let normals = a.normals_half_size.map(|h| estimate_normal_map(&depth, &k, h));
    let mode = if a.ascii { PlyMode::Ascii } else { PlyMode::BinaryLittleEndian };
    io::write_ply(&a.output, &cloud, normals.as_ref(), mode)?;
    emit_json("backproject", &a, json!({ "points": cloud.len() }))
}

fn normals(a: NormalsArgs) -> CliResult {
    let k = load_k(&a.intrinsics)?;
    let depth = load_depth(&a.depth, Some(&k))?;
    let map = estimate_normal_map(&depth, &k, a.patch_half_size);
    io::write_normal_map_pfm(&a.output, &map)?;
    if let Some(ply) = &a.ply {
        io::write_ply(ply, &backproject_map(&depth, &k), Some(&map), PlyMode::BinaryLittleEndian)?;
    }
    emit_json("normals", &a, json!({ "valid": map.valid_count(), "pixels": map.normals.len() }))
}

fn sample(a: SampleArgs) -> CliResult {
    let cfg = a.sampling.config(a.n, a.seed);
    usage(cfg.validate())?;
    let k = load_k(&a.intrinsics)?;
    let gt = load_depth(&a.gt, Some(&k))?;
    let threads = if a.threads == 0 { rayon::current_num_threads() } else { a.threads };
    let set = sample_triplets_with_threads(&gt, &k, &cfg, threads)?;
    if set.underfull {
        eprintln!(
            "warning: accepted {} of {} triplets within {} attempts",
            set.len(),
            cfg.n_groups,
            set.attempts_used
        );
    }
    let text = csv_echo("sample", &a)? + &io::triplets::triplets_csv(&set);
    write_text(a.output.as_deref(), &text)
}

fn vn_loss(a: VnLossArgs) -> CliResult {
    let k = load_k(&a.intrinsics)?;
    let pred = load_depth(&a.pred, Some(&k))?;
    let gt = load_depth(&a.gt, Some(&k))?;
    let triplets = match (&a.triplets, a.seed) {
        (Some(path), _) => io::read_triplets_csv(path)?,
        (None, Some(seed)) => {
            let cfg = a.sampling.config(a.n, seed);
            usage(cfg.validate())?;
            vnl::sample_triplets(&gt, &k, &cfg)?.triplets
        }
        (None, None) => return Err(Failure::Usage("either --triplets or --seed is required".into())),
    };
    let (report, grad) = vn_loss_grad(&pred, &gt, &k, &triplets, a.ohem_keep)?;
    if let Some(path) = &a.grad {
        io::write_grid_pfm(path, &grad)?;
    }
    emit_json(
        "vn-loss",
        &a,
        json!({
            "value": report.value,
            "n_triplets": triplets.len(),
            "n_scored": report.per_sample.len(),
            "n_effective": report.n_effective,
        }),
    )
}

fn eval_depth(a: EvalDepthArgs) -> CliResult {
    let k = a.input.intrinsics.as_deref().map(load_k).transpose()?;
    let pred = load_depth(&a.pred, k.as_ref())?;
    let gt = load_depth(&a.gt, k.as_ref())?;
    let report = depth_metrics_with(&pred, &gt, DepthEvalOptions { max_depth: a.max_depth })?;
    if report.n_clipped > 0 {
        eprintln!("warning: {} non-positive predictions clipped", report.n_clipped);
    }
    if a.csv {
        let text = csv_echo("eval-depth", &a)? + DepthMetricsReport::CSV_HEADER + "\n" + &report.csv_row() + "\n";
        write_text(None, &text)
    } else {
        emit_json("eval-depth", &a, serde_json::to_value(report).map_err(Error::from)?)
    }
}

fn eval_normals(a: EvalNormalsArgs) -> CliResult {
    let pred = io::read_normal_map_pfm(&a.pred)?;
    let gt = io::read_normal_map_pfm(&a.gt)?;
    let report = normal_metrics(&pred, &gt)?;
    if a.csv {
        let text = csv_echo("eval-normals", &a)? + NormalMetricsReport::CSV_HEADER + "\n" + &report.csv_row() + "\n";
        write_text(None, &text)
    } else {
        emit_json("eval-normals", &a, serde_json::to_value(report).map_err(Error::from)?)
    }
}

fn noise_lab(a: NoiseLabArgs) -> CliResult {
    let cfg = NoiseConfig {
        n_vn_groups: a.n_groups,
        n_sn_points: a.n_points,
        cloud_points: a.cloud_points,
        k_neighbors: a.k,
        ..NoiseConfig::new(a.sigmas.clone(), a.seed)
    };
    usage(cfg.validate())?;
    let rows = vn_sn_robustness(&cfg)?;
    let mut text = csv_echo("noise-lab", &a)? + "sigma,vn_mean_deg,sn_mean_deg\n";
    for r in rows {
        text += &format!("{},{},{}\n", r.sigma, r.vn_mean_deg, r.sn_mean_deg);
    }
    write_text(a.output.as_deref(), &text)
}

fn patch_sensitivity(a: PatchSensitivityArgs) -> CliResult {
    let k = load_k(&a.intrinsics)?;
    let depth = load_depth(&a.depth, Some(&k))?;
    let m = patch_size_sensitivity(&depth, &k, &a.sizes)?;
    let mut text = csv_echo("patch-sensitivity", &a)?;
    text += "half_size";
    for s in &m.half_sizes {
        text += &format!(",{s}");
    }
    text += "\n";
    for (s, row) in m.half_sizes.iter().zip(&m.mean_deg) {
        text += &s.to_string();
        for v in row {
            text += &format!(",{v}");
        }
        text += "\n";
    }
    write_text(None, &text)
}

fn refine(a: RefineArgs) -> CliResult {
    let cfg = RefineConfig {
        lambda_vn: a.lambda,
        n_triplets: a.n_triplets,
        ohem_keep: a.ohem_keep,
        ..RefineConfig::new(a.steps, a.lr, a.seed)
    };
    usage(cfg.validate())?;
    let k = load_k(&a.intrinsics)?;
    let init = load_depth(&a.init, Some(&k))?;
    let gt = load_depth(&a.gt, Some(&k))?;
    fs::create_dir_all(&a.out_dir)?;
    let (refined, history) = match refine_depth_traced(&init, &gt, &k, &cfg) {
        Ok(o) => (Some(o.depth), o.history),
        Err(RefineError::Diverged(d)) => (None, d.history),
        Err(RefineError::Other(e)) => return Err(e.into()),
    };
    let mut csv = csv_echo("refine", &a)? + "step,pixel_loss,vn_loss,total\n";
    for h in &history {
        csv += &format!("{},{},{},{}\n", h.step, h.pixel_loss, h.vn_loss, h.total);
    }
    fs::write(a.out_dir.join("history.csv"), csv)?;
    let Some(refined) = refined else {
        let step = history.last().map_or(0, |h| h.step);
        return Err(Error::Diverged { step }.into());
    };
    io::write_pfm(&a.out_dir.join("refined.pfm"), &refined)?;
    for (name, depth) in [("before.ply", &init), ("after.ply", &refined)] {
        let cloud = backproject_map(depth, &k);
        let normals = estimate_normal_map(depth, &k, a.patch_half_size);
        io::write_ply(&a.out_dir.join(name), &cloud, Some(&normals), PlyMode::BinaryLittleEndian)?;
    }
    let before = evaluate_refinement(&init, &gt, &k, a.patch_half_size)?;
    let after = evaluate_refinement(&refined, &gt, &k, a.patch_half_size)?;
    emit_json("refine", &a, json!({ "before": before, "after": after }))
}

fn synth(a: SynthArgs) -> CliResult {
    let text = fs::read_to_string(&a.spec)?;
    let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", a.spec.display())))?;
    usage(spec.validate())?;
    let (depth, normals) = synthesize_scene(&spec)?;
    fs::create_dir_all(&a.out_dir)?;
    io::write_pfm(&a.out_dir.join("depth.pfm"), &depth)?;
    io::write_normal_map_pfm(&a.out_dir.join("normals.pfm"), &normals)?;
    io::write_intrinsics(&a.out_dir.join("intrinsics.json"), &spec.intrinsics)?;
    emit_json(
        "synth",
        &a,
        json!({ "valid": depth.valid_count(), "pixels": depth.len() }),
    )
}
