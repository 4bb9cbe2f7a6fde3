//! End-to-end planning: landmarks → initial pose → ROI → threshold → ICP →
//! tumor tree → needle selection.

use std::path::PathBuf;
use std::time::Instant;

use brachyplan_core::applicator::{
    select_needles, superior_surface_points, IcpSummary, LandmarkPair, Plan, Provenance, TemplateConfig,
};
use brachyplan_core::collision::{build_obb_tree, ObbTree};
use brachyplan_core::registration::{
    absolute_orientation, build_nn_index, fiducial_registration_error, icp, CorrespondencePairs, IcpParams, IcpResult,
};
use brachyplan_core::volume::{crop_roi, marching_cubes, threshold_points, RoiBox, ScalarVolume};
use brachyplan_core::{PointCloud, RigidTransform, TriangleMesh};
use serde::Serialize;

use crate::formats::{config_hash, sha256_hex};
use crate::{nrrd, stl};

/// Default number of surface points sampled per template hole for ICP.
pub const DEFAULT_POINTS_PER_HOLE: usize = 81;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Load,
    Landmarks,
    Roi,
    Threshold,
    Icp,
    Tumor,
    Selection,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Landmarks => "landmarks",
            Stage::Roi => "roi",
            Stage::Threshold => "threshold",
            Stage::Icp => "icp",
            Stage::Tumor => "tumor",
            Stage::Selection => "selection",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
}

impl PipelineError {
    fn new(stage: Stage, e: impl std::fmt::Display) -> Self {
        PipelineError { stage, message: e.to_string() }
    }
}

/// A volume together with its content id.
#[derive(Clone, Debug)]
pub struct LoadedVolume {
    pub volume: ScalarVolume,
    /// SHA-256 of the canonical NRRD encoding.
    pub id: String,
}

impl LoadedVolume {
    pub fn new(volume: ScalarVolume) -> Self {
        let id = sha256_hex(&nrrd::write_nrrd(&volume));
        LoadedVolume { volume, id }
    }

    pub fn read(path: &std::path::Path) -> Result<Self, String> {
        let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let volume = nrrd::read_nrrd(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(Self::new(volume))
    }
}

#[derive(Clone, Debug)]
pub enum TumorSource {
    Mesh(TriangleMesh),
    /// Label map isosurfaced at `iso`.
    Label { volume: ScalarVolume, iso: f64 },
    MeshFile(PathBuf),
    LabelFile { path: PathBuf, iso: f64 },
}

impl TumorSource {
    /// Loads file sources.
    pub fn load(&self) -> Result<TumorSource, String> {
        Ok(match self {
            TumorSource::MeshFile(path) => {
                let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
                TumorSource::Mesh(stl::read_stl(&bytes).map_err(|e| format!("{}: {e}", path.display()))?.mesh)
            }
            TumorSource::LabelFile { path, iso } => {
                let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
                let volume = nrrd::read_nrrd(&bytes).map_err(|e| format!("{}: {e}", path.display()))?;
                TumorSource::Label { volume, iso: *iso }
            }
            other => other.clone(),
        })
    }

    /// Builds the tumor tree (image coordinates) from an in-memory source.
    pub fn build_tree(&self) -> Result<ObbTree, String> {
        let mesh = match self {
            TumorSource::Mesh(m) => m.clone(),
            TumorSource::Label { volume, iso } => marching_cubes(volume, *iso),
            _ => return Err("tumor source is not loaded".into()),
        };
        build_obb_tree(&mesh).map_err(|_| "tumor mesh is empty".to_string())
    }
}

/// Parameters shared by the pipeline and the interactive session.
#[derive(Clone, Debug)]
pub struct PipelineRequest {
    pub config: TemplateConfig,
    pub landmarks: Vec<LandmarkPair>,
    pub threshold: f64,
    pub roi: Option<RoiBox>,
    pub depth: f64,
    pub icp: IcpParams,
    pub points_per_hole: usize,
}

impl PipelineRequest {
    pub fn new(config: TemplateConfig, landmarks: Vec<LandmarkPair>, threshold: f64, depth: f64) -> Self {
        PipelineRequest {
            config,
            landmarks,
            threshold,
            roi: None,
            depth,
            icp: IcpParams::default(),
            points_per_hole: DEFAULT_POINTS_PER_HOLE,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: Stage,
    pub ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    pub timings: Vec<StageTiming>,
    pub fre: f64,
    pub final_mse: f64,
    pub iterations: usize,
    pub selected: usize,
}

/// Horn fit of `landmarks` (model → image) and its FRE.
pub fn initial_pose(landmarks: &[LandmarkPair]) -> Result<(RigidTransform, f64), String> {
    if landmarks.len() < 3 {
        return Err(format!("at least 3 landmarks are required, got {}", landmarks.len()));
    }
    let pairs = CorrespondencePairs::new(
        landmarks.iter().map(|l| l.source).collect(),
        landmarks.iter().map(|l| l.target).collect(),
    )
    .map_err(|e| e.to_string())?;
    let pose = absolute_orientation(&pairs).map_err(|e| e.to_string())?;
    Ok((pose, fiducial_registration_error(&pose, &pairs)))
}

/// Threshold points of `volume` inside `roi` (whole volume when `None`).
pub fn roi_points(volume: &ScalarVolume, roi: Option<&RoiBox>, threshold: f64) -> Result<PointCloud, (Stage, String)> {
    let cropped;
    let vol = match roi {
        Some(b) => {
            cropped = crop_roi(volume, b).map_err(|e| (Stage::Roi, e.to_string()))?;
            &cropped
        }
        None => volume,
    };
    Ok(threshold_points(vol, threshold))
}

/// Refines `initial` (model → image) by ICP of the image points onto the
/// template's superior-surface points. Returns the refined model → image pose.
pub fn refine_pose(
    config: &TemplateConfig,
    points: &PointCloud,
    initial: &RigidTransform,
    params: &IcpParams,
    points_per_hole: usize,
) -> Result<(RigidTransform, IcpResult), String> {
    if points.is_empty() {
        return Err("no voxels at or above the threshold".into());
    }
    let fixed = build_nn_index(&superior_surface_points(config, points_per_hole)).map_err(|e| e.to_string())?;
    let result = icp(points, &fixed, &initial.inverse(), params).map_err(|e| e.to_string())?;
    Ok((result.transform.inverse(), result))
}

pub fn icp_summary(result: &IcpResult) -> IcpSummary {
    IcpSummary { iterations: result.iterations, final_mse: result.final_mse().unwrap_or(0.0), termination: result.termination }
}

/// Plan at `depth` with the needles hitting `tumor` selected.
pub fn build_plan(
    config: &TemplateConfig,
    pose: RigidTransform,
    depth: f64,
    tumor: &ObbTree,
    provenance: Provenance,
) -> Result<Plan, String> {
    if !(depth > 0.0 && depth <= config.max_needle_length) {
        return Err(format!("depth {depth} must lie in (0, {}]", config.max_needle_length));
    }
    let selected = select_needles(config, &pose, depth, tumor);
    let mut plan = Plan::for_config(config, pose, depth);
    for id in &selected {
        plan.needle_mut(id).expect("selected ids come from the config").selected = true;
    }
    plan.provenance = provenance;
    Ok(plan)
}

/// Runs the pipeline on a volume file.
pub fn run_pipeline(
    volume_path: &std::path::Path,
    request: &PipelineRequest,
    tumor: &TumorSource,
) -> Result<(Plan, PipelineReport), PipelineError> {
    let start = Instant::now();
    let volume = LoadedVolume::read(volume_path).map_err(|e| PipelineError::new(Stage::Load, e))?;
    let tumor = tumor.load().map_err(|e| PipelineError::new(Stage::Load, e))?;
    let load_ms = start.elapsed().as_secs_f64() * 1e3;
    let (plan, mut report) = run_pipeline_loaded(&volume, request, &tumor)?;
    report.timings.insert(0, StageTiming { stage: Stage::Load, ms: load_ms });
    Ok((plan, report))
}

/// Runs the pipeline on an already loaded volume and tumor source.
pub fn run_pipeline_loaded(
    volume: &LoadedVolume,
    request: &PipelineRequest,
    tumor: &TumorSource,
) -> Result<(Plan, PipelineReport), PipelineError> {
    let config = &request.config;
    config.validate().map_err(|e| PipelineError::new(Stage::Load, e))?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |stage: Stage, timings: &mut Vec<StageTiming>| {
        let now = Instant::now();
        timings.push(StageTiming { stage, ms: (now - clock).as_secs_f64() * 1e3 });
        clock = now;
    };

    let (initial, fre) = initial_pose(&request.landmarks).map_err(|e| PipelineError::new(Stage::Landmarks, e))?;
    lap(Stage::Landmarks, &mut timings);

    let cropped;
    let vol = match &request.roi {
        Some(b) => {
            cropped = crop_roi(&volume.volume, b).map_err(|e| PipelineError::new(Stage::Roi, e))?;
            &cropped
        }
        None => &volume.volume,
    };
    lap(Stage::Roi, &mut timings);

    let points = threshold_points(vol, request.threshold);
    lap(Stage::Threshold, &mut timings);

    let (pose, result) = refine_pose(config, &points, &initial, &request.icp, request.points_per_hole)
        .map_err(|e| PipelineError::new(Stage::Icp, e))?;
    lap(Stage::Icp, &mut timings);

    let tree = tumor.build_tree().map_err(|e| PipelineError::new(Stage::Tumor, e))?;
    lap(Stage::Tumor, &mut timings);

    let provenance = Provenance {
        volume_id: volume.id.clone(),
        landmarks: request.landmarks.clone(),
        icp: Some(icp_summary(&result)),
        config_hash: config_hash(config),
    };
    let plan = build_plan(config, pose, request.depth, &tree, provenance).map_err(|e| PipelineError::new(Stage::Selection, e))?;
    lap(Stage::Selection, &mut timings);

    let report = PipelineReport {
        timings,
        fre,
        final_mse: result.final_mse().unwrap_or(0.0),
        iterations: result.iterations,
        selected: plan.selected_ids().len(),
    };
    Ok((plan, report))
}
