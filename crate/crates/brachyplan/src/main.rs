use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brachyplan::formats::{self, LandmarkSpec, MeshJson};
use brachyplan::phantom::{generate_phantom, PhantomParams};
use brachyplan::pipeline::{
    build_plan, initial_pose, refine_pose, roi_points, run_pipeline, LoadedVolume, PipelineRequest,
    TumorSource, DEFAULT_POINTS_PER_HOLE,
};
use brachyplan::server::{serve, AppState};
use brachyplan::{nrrd, stl};
use brachyplan_core::applicator::{LandmarkPair, Provenance, TemplateConfig};
use brachyplan_core::registration::IcpParams;
use brachyplan_core::volume::{marching_cubes, RoiBox};
use brachyplan_core::RigidTransform;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

/// Template-guided interstitial brachytherapy planning.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Writes a synthetic scene (volume, tumor, landmarks, config, truth) to --out.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Gaussian noise sigma added to the volume.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Rigid fit of the landmark pairs (model → image).
    Register {
        #[arg(long)]
        landmarks: PathBuf,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Landmark fit refined by ICP on the thresholded volume.
    Icp {
        #[command(flatten)]
        image: ImageArgs,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Marching Cubes isosurface of a volume, written as binary STL or mesh JSON (`.json`).
    ExtractSurface {
        #[arg(long)]
        volume: PathBuf,
        /// Iso value.
        #[arg(long)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Needle selection for a given pose (or the landmark fit).
    Select {
        /// Pose JSON; the landmark fit is used when absent.
        #[arg(long, required_unless_present = "landmarks")]
        pose: Option<PathBuf>,
        #[arg(long)]
        landmarks: Option<PathBuf>,
        #[command(flatten)]
        tumor: TumorArgs,
        #[arg(long)]
        depth: f64,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline: landmarks, ROI, threshold, ICP, tumor, selection.
    Pipeline {
        #[command(flatten)]
        image: ImageArgs,
        #[command(flatten)]
        tumor: TumorArgs,
        #[arg(long)]
        depth: f64,
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// HTTP API for the planning UI.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory of static UI assets.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArg,
    },
}

#[derive(Args)]
struct ConfigArg {
    /// Template config JSON; the default template when absent.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ImageArgs {
    #[arg(long)]
    volume: PathBuf,
    #[arg(long)]
    landmarks: PathBuf,
    #[arg(long)]
    threshold: f64,
    /// Voxel index box `i0,j0,k0,i1,j1,k1` (inclusive).
    #[arg(long, value_parser = parse_roi)]
    roi: Option<RoiBox>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct TumorArgs {
    #[arg(long)]
    tumor_mesh: Option<PathBuf>,
    /// Label map isosurfaced at 0.5.
    #[arg(long)]
    tumor_label: Option<PathBuf>,
}

impl TumorArgs {
    fn source(&self) -> TumorSource {
        match (&self.tumor_mesh, &self.tumor_label) {
            (Some(p), _) => TumorSource::MeshFile(p.clone()),
            (None, Some(p)) => TumorSource::LabelFile { path: p.clone(), iso: 0.5 },
            (None, None) => unreachable!("clap requires one tumor source"),
        }
    }
}

fn parse_roi(s: &str) -> Result<RoiBox, String> {
    let v: Vec<usize> = s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    let [i0, j0, k0, i1, j1, k1] = v[..] else { return Err("expected six comma-separated indices".into()) };
    Ok(RoiBox { lower: [i0, j0, k0], upper: [i1, j1, k1] })
}

enum Failure {
    Input(String),
    Stage(String),
}

type Outcome = Result<(), Failure>;

fn input(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn stage(name: &str, e: impl std::fmt::Display) -> Failure {
    Failure::Stage(format!("{name} stage failed: {e}"))
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Outcome {
    std::fs::write(path, bytes).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Outcome {
    match out {
        Some(p) => write(p, bytes),
        None => {
            let mut stdout = std::io::stdout().lock();
            let newline: &[u8] = if bytes.ends_with(b"\n") { b"" } else { b"\n" };
            match stdout.write_all(bytes).and_then(|()| stdout.write_all(newline)).and_then(|()| stdout.flush()) {
                // a closed reader (`| head`) is not a failure of the command
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Failure::Input(format!("stdout: {e}"))),
                _ => Ok(()),
            }
        }
    }
}

fn load_config(arg: &ConfigArg) -> Result<TemplateConfig, Failure> {
    match &arg.config {
        Some(p) => formats::read_config(&read(p)?).map_err(|e| input(format!("{}: {e}", p.display()))),
        None => Ok(TemplateConfig::default()),
    }
}

fn load_landmarks(path: &Path, config: &TemplateConfig) -> Result<Vec<LandmarkPair>, Failure> {
    let specs = formats::read_landmarks(&read(path)?).map_err(|e| input(format!("{}: {e}", path.display())))?;
    formats::resolve_landmarks(&specs, config).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn pretty(v: &serde_json::Value) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("JSON serializes");
    out.push(b'\n');
    out
}

fn phantom(out: &Path, seed: u64, noise: f64, config: TemplateConfig) -> Outcome {
    let params = PhantomParams { config, seed, noise_sigma: noise, ..PhantomParams::default() };
    let scene = generate_phantom(&params).map_err(input)?;
    std::fs::create_dir_all(out).map_err(|e| input(format!("{}: {e}", out.display())))?;
    let landmarks: Vec<LandmarkSpec> = params
        .config
        .landmarks
        .iter()
        .zip(scene.landmark_truth.target())
        .map(|(f, &point)| LandmarkSpec::Feature { feature: f.id.clone(), point })
        .collect();
    let truth = json!({
        "pose": scene.true_pose,
        "tumor_center": scene.tumor_center,
        "tumor_radius": scene.tumor_radius,
        "threshold": scene.threshold,
        "roi": scene.roi,
        "seed": seed,
        "noise_sigma": noise,
    });
    write(&out.join("volume.nrrd"), &nrrd::write_nrrd(&scene.volume))?;
    write(&out.join("tumor-label.nrrd"), &nrrd::write_nrrd(&scene.tumor_label))?;
    write(&out.join("tumor.stl"), &stl::write_stl_binary(&scene.tumor_mesh))?;
    write(&out.join("landmarks.json"), &formats::write_landmarks(&landmarks))?;
    write(&out.join("config.json"), &formats::write_config(&params.config))?;
    write(&out.join("scene.json"), &pretty(&truth))
}

fn register(landmarks: &Path, config: TemplateConfig, out: Option<&Path>) -> Outcome {
    let pairs = load_landmarks(landmarks, &config)?;
    let (pose, fre) = initial_pose(&pairs).map_err(|e| stage("landmarks", e))?;
    eprintln!("fre {fre:.6} mm");
    emit(out, &formats::write_pose(&pose))
}

fn refined_pose(image: &ImageArgs, config: &TemplateConfig) -> Result<(RigidTransform, serde_json::Value), Failure> {
    let volume = LoadedVolume::read(&image.volume).map_err(input)?;
    let pairs = load_landmarks(&image.landmarks, config)?;
    let (initial, fre) = initial_pose(&pairs).map_err(|e| stage("landmarks", e))?;
    let points = roi_points(&volume.volume, image.roi.as_ref(), image.threshold).map_err(|(s, e)| stage(s.as_str(), e))?;
    let (pose, result) = refine_pose(config, &points, &initial, &IcpParams::default(), DEFAULT_POINTS_PER_HOLE)
        .map_err(|e| stage("icp", e))?;
    let summary = json!({ "fre": fre, "points": points.len(), "iterations": result.iterations,
        "termination": result.termination, "mse_trace": result.mse_trace });
    Ok((pose, summary))
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Cmd::Phantom { out, seed, noise, config } => phantom(&out, seed, noise, load_config(&config)?),
        Cmd::Register { landmarks, config, out } => register(&landmarks, load_config(&config)?, out.as_deref()),
        Cmd::Icp { image, config, out } => {
            let config = load_config(&config)?;
            let (pose, summary) = refined_pose(&image, &config)?;
            eprintln!("{summary}");
            emit(out.as_deref(), &formats::write_pose(&pose))
        }
        Cmd::ExtractSurface { volume, threshold, out } => {
            let volume = nrrd::read_nrrd(&read(&volume)?).map_err(input)?;
            let mesh = marching_cubes(&volume, threshold);
            eprintln!("{} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
            if out.extension().is_some_and(|e| e == "json") {
                write(&out, &serde_json::to_vec(&MeshJson::from(&mesh)).expect("mesh serializes"))
            } else {
                write(&out, &stl::write_stl_binary(&mesh))
            }
        }
        Cmd::Select { pose, landmarks, tumor, depth, config, out } => {
            let config = load_config(&config)?;
            let mut provenance = Provenance { config_hash: formats::config_hash(&config), ..Provenance::default() };
            let pose = match (pose, landmarks) {
                (Some(p), _) => formats::read_pose(&read(&p)?).map_err(|e| input(format!("{}: {e}", p.display())))?,
                (None, Some(l)) => {
                    provenance.landmarks = load_landmarks(&l, &config)?;
                    initial_pose(&provenance.landmarks).map_err(|e| stage("landmarks", e))?.0
                }
                (None, None) => unreachable!("clap requires a pose source"),
            };
            let source = tumor.source().load().map_err(input)?;
            let tree = source.build_tree().map_err(|e| stage("tumor", e))?;
            let plan = build_plan(&config, pose, depth, &tree, provenance).map_err(|e| stage("selection", e))?;
            eprintln!("selected {:?}", plan.selected_ids());
            emit(out.as_deref(), &formats::export_plan(&plan))
        }
        Cmd::Pipeline { image, tumor, depth, config, out } => {
            let config = load_config(&config)?;
            let landmarks = load_landmarks(&image.landmarks, &config)?;
            let mut request = PipelineRequest::new(config, landmarks, image.threshold, depth);
            request.roi = image.roi;
            let (plan, report) = run_pipeline(&image.volume, &request, &tumor.source()).map_err(|e| match e.stage {
                brachyplan::pipeline::Stage::Load => input(e),
                _ => Failure::Stage(e.to_string()),
            })?;
            eprintln!("{}", serde_json::to_string(&report).expect("report serializes"));
            emit(out.as_deref(), &formats::export_plan(&plan))
        }
        Cmd::Serve { addr, static_dir, config } => {
            let state = AppState::new(load_config(&config)?, static_dir);
            let runtime = tokio::runtime::Runtime::new().map_err(input)?;
            runtime.block_on(serve(addr, state)).map_err(|e| input(format!("{addr}: {e}")))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Stage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
