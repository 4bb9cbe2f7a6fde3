//! Interactive planning session: a state machine over the pipeline stages
//! driven by revisioned commands.
//!
//! Every successful mutation bumps the revision by one and returns a JSON
//! delta naming what changed. A failed command leaves the session untouched.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use brachyplan_core::applicator::{needle_geometry, obturator_mesh, template_mesh, IcpSummary, LandmarkPair, Plan, Provenance, TemplateConfig};
use brachyplan_core::applicator::hole_grid;
use brachyplan_core::collision::ObbTree;
use brachyplan_core::geom::{mesh_plane_contours, Polyline, SlicePlane};
use brachyplan_core::registration::IcpParams;
use brachyplan_core::volume::RoiBox;
use brachyplan_core::{Axis, PointCloud, RigidTransform, TriangleMesh, UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::formats::{config_hash, export_plan, MeshJson};
use crate::pipeline::{build_plan, icp_summary, initial_pose, refine_pose, roi_points, LoadedVolume, TumorSource, DEFAULT_POINTS_PER_HOLE};

/// Largest number of points returned in a threshold preview.
pub const PREVIEW_POINTS: usize = 2000;
/// Landmark slots accepted by `set-landmark`.
pub const MAX_LANDMARKS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    /// The command is not valid at the current stage.
    #[error("{0}")]
    Stage(String),
    #[error("{0}")]
    Input(String),
    #[error("stale revision {got}, session is at {current}")]
    Conflict { current: u64, got: u64 },
}

impl SessionError {
    pub fn kind(&self) -> &'static str {
        match self {
            SessionError::Stage(_) => "stage",
            SessionError::Input(_) => "input",
            SessionError::Conflict { .. } => "conflict",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum TumorSpec {
    MeshPath { mesh_path: PathBuf },
    LabelPath { label_path: PathBuf, #[serde(default = "half")] iso: f64 },
    Mesh { mesh: MeshJson },
}

fn half() -> f64 {
    0.5
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", content = "payload", rename_all = "kebab-case")]
pub enum Command {
    LoadVolume { path: PathBuf },
    SetLandmark { index: usize, point: Vec3, feature: String },
    RegisterInitial,
    SetRoi { lower: [usize; 3], upper: [usize; 3] },
    SetThreshold { value: f64 },
    RunIcp,
    /// Rotation about the model x, y, z axes (degrees) then translation
    /// (mm), applied in the model frame.
    NudgePose { rotation_deg: [f64; 3], translation: Vec3 },
    SetTumor(TumorSpec),
    SelectNeedles { depth: f64 },
    ToggleNeedle { id: String },
    SetDepth { id: String, depth: f64 },
    ExportPlan { #[serde(default)] path: Option<PathBuf> },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::LoadVolume { .. } => "load-volume",
            Command::SetLandmark { .. } => "set-landmark",
            Command::RegisterInitial => "register-initial",
            Command::SetRoi { .. } => "set-roi",
            Command::SetThreshold { .. } => "set-threshold",
            Command::RunIcp => "run-icp",
            Command::NudgePose { .. } => "nudge-pose",
            Command::SetTumor(_) => "set-tumor",
            Command::SelectNeedles { .. } => "select-needles",
            Command::ToggleNeedle { .. } => "toggle-needle",
            Command::SetDepth { .. } => "set-depth",
            Command::ExportPlan { .. } => "export-plan",
        }
    }

    pub fn is_mutation(&self) -> bool {
        !matches!(self, Command::ExportPlan { .. })
    }
}

/// Wire form `{revision, type, payload}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub revision: u64,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default)]
    pub payload: Value,
}

impl Envelope {
    pub fn command(&self) -> Result<Command, SessionError> {
        let mut v = json!({ "type": self.kind });
        if !self.payload.is_null() {
            v["payload"] = self.payload.clone();
        }
        serde_json::from_value(v).map_err(|e| SessionError::Input(format!("invalid {} command: {e}", self.kind)))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandmarkSlot {
    pub feature: String,
    pub point: Vec3,
}

#[derive(Clone, Debug)]
pub struct Tumor {
    pub tree: Arc<ObbTree>,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    revision: u64,
    config: Arc<TemplateConfig>,
    volume: Option<Arc<LoadedVolume>>,
    landmarks: BTreeMap<usize, LandmarkSlot>,
    initial: Option<(RigidTransform, f64)>,
    roi: Option<RoiBox>,
    threshold: Option<f64>,
    points: Option<Arc<PointCloud>>,
    icp: Option<IcpSummary>,
    pose: Option<RigidTransform>,
    tumor: Option<Tumor>,
    plan: Option<Plan>,
    busy: Option<&'static str>,
    pub icp_params: IcpParams,
    pub points_per_hole: usize,
}

fn stage<T>(msg: &str) -> Result<T, SessionError> {
    Err(SessionError::Stage(msg.to_string()))
}

fn input<T>(msg: impl Into<String>) -> Result<T, SessionError> {
    Err(SessionError::Input(msg.into()))
}

fn pose_json(p: &RigidTransform) -> Value {
    serde_json::to_value(p).expect("pose serializes")
}

impl Session {
    pub fn new(id: impl Into<String>, config: TemplateConfig) -> Result<Self, SessionError> {
        config.validate().map_err(|e| SessionError::Input(e.to_string()))?;
        Ok(Session {
            id: id.into(),
            revision: 0,
            config: Arc::new(config),
            volume: None,
            landmarks: BTreeMap::new(),
            initial: None,
            roi: None,
            threshold: None,
            points: None,
            icp: None,
            pose: None,
            tumor: None,
            plan: None,
            busy: None,
            icp_params: IcpParams::default(),
            points_per_hole: DEFAULT_POINTS_PER_HOLE,
        })
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn config(&self) -> &TemplateConfig {
        &self.config
    }

    pub fn volume(&self) -> Option<&LoadedVolume> {
        self.volume.as_deref()
    }

    pub fn pose(&self) -> Option<RigidTransform> {
        self.pose
    }

    pub fn plan(&self) -> Option<&Plan> {
        self.plan.as_ref()
    }

    pub fn set_busy(&mut self, what: Option<&'static str>) {
        self.busy = what;
    }

    /// Installs an in-memory volume, as `load-volume` does for a file.
    pub fn load_volume(&mut self, revision: u64, volume: LoadedVolume) -> Result<Value, SessionError> {
        self.check_revision(revision)?;
        let mut next = self.clone();
        let delta = next.install_volume(volume)?;
        Ok(self.commit(next, "load-volume", delta))
    }

    fn check_revision(&self, revision: u64) -> Result<(), SessionError> {
        if revision != self.revision {
            return Err(SessionError::Conflict { current: self.revision, got: revision });
        }
        Ok(())
    }

    fn commit(&mut self, mut next: Session, kind: &str, mut delta: Value) -> Value {
        next.revision = self.revision + 1;
        next.busy = None;
        *self = next;
        delta["revision"] = json!(self.revision);
        delta["type"] = json!(kind);
        delta
    }

    /// Applies `command` if `revision` is current. Read-only commands
    /// (`export-plan`) do not check or bump the revision.
    pub fn apply(&mut self, revision: u64, command: &Command) -> Result<Value, SessionError> {
        if let Command::ExportPlan { path } = command {
            return self.export(path.as_deref());
        }
        self.check_revision(revision)?;
        let mut next = self.clone();
        let delta = next.mutate(command)?;
        Ok(self.commit(next, command.name(), delta))
    }

    /// Canonical plan JSON, optionally also written to `path`.
    pub fn export_bytes(&self) -> Result<Vec<u8>, SessionError> {
        let plan = self.plan.as_ref().map_or_else(|| stage("no plan: run select-needles first"), Ok)?;
        Ok(export_plan(plan))
    }

    /// `export-plan`: the plan in the delta, plus an optional snapshot file.
    pub fn export(&self, path: Option<&std::path::Path>) -> Result<Value, SessionError> {
        let bytes = self.export_bytes()?;
        if let Some(path) = path {
            std::fs::write(path, &bytes).map_err(|e| SessionError::Input(format!("{}: {e}", path.display())))?;
        }
        let plan: Value = serde_json::from_slice(&bytes).expect("exported plan is JSON");
        Ok(json!({ "revision": self.revision, "type": "export-plan", "plan": plan }))
    }

    fn install_volume(&mut self, volume: LoadedVolume) -> Result<Value, SessionError> {
        if !self.landmarks.is_empty() {
            return stage("the volume can only be replaced before any landmark is set");
        }
        let (lo, hi) = volume.volume.value_range();
        let delta = json!({
            "volume": { "id": volume.id, "dims": volume.volume.dims(), "spacing": volume.volume.spacing(), "origin": volume.volume.origin(), "range": [lo, hi] },
            "cleared": ["roi", "threshold"],
        });
        self.volume = Some(Arc::new(volume));
        self.roi = None;
        self.threshold = None;
        self.points = None;
        Ok(delta)
    }

    fn clear_pose(&mut self) -> Vec<&'static str> {
        let mut cleared = Vec::new();
        if self.initial.take().is_some() {
            cleared.push("initial");
        }
        if self.icp.take().is_some() {
            cleared.push("icp");
        }
        if self.pose.take().is_some() {
            cleared.push("pose");
        }
        if self.plan.take().is_some() {
            cleared.push("plan");
        }
        cleared
    }

    fn refresh_points(&mut self) -> Result<Option<usize>, SessionError> {
        let (Some(vol), Some(t)) = (&self.volume, self.threshold) else {
            return Ok(None);
        };
        let pts = roi_points(&vol.volume, self.roi.as_ref(), t).map_err(|(_, e)| SessionError::Input(e))?;
        let n = pts.len();
        self.points = Some(Arc::new(pts));
        Ok(Some(n))
    }

    fn preview(&self) -> Vec<Vec3> {
        let Some(pts) = &self.points else { return Vec::new() };
        let step = pts.len().div_ceil(PREVIEW_POINTS).max(1);
        pts.points.iter().step_by(step).copied().collect()
    }

    fn landmark_pairs(&self) -> Vec<LandmarkPair> {
        self.landmarks
            .values()
            .map(|s| LandmarkPair { source: self.config.landmark(&s.feature).expect("checked on insert").point, target: s.point })
            .collect()
    }

    fn mutate(&mut self, command: &Command) -> Result<Value, SessionError> {
        match command {
            Command::LoadVolume { path } => {
                if !self.landmarks.is_empty() {
                    return stage("the volume can only be replaced before any landmark is set");
                }
                let volume = LoadedVolume::read(path).map_err(SessionError::Input)?;
                self.install_volume(volume)
            }
            Command::SetLandmark { index, point, feature } => {
                if self.volume.is_none() {
                    return stage("load a volume before setting landmarks");
                }
                if *index >= MAX_LANDMARKS {
                    return input(format!("landmark index {index} must be below {MAX_LANDMARKS}"));
                }
                if self.config.landmark(feature).is_none() {
                    return input(format!("unknown landmark feature {feature:?}"));
                }
                if !point.is_finite() {
                    return input("landmark point must be finite");
                }
                self.landmarks.insert(*index, LandmarkSlot { feature: feature.clone(), point: *point });
                let cleared = self.clear_pose();
                Ok(json!({ "landmark": { "index": index, "feature": feature, "point": point }, "cleared": cleared }))
            }
            Command::RegisterInitial => {
                let pairs = self.landmark_pairs();
                if pairs.len() < 3 {
                    return stage(&format!("register-initial needs at least 3 landmarks, {} set", pairs.len()));
                }
                let (pose, fre) = initial_pose(&pairs).map_err(SessionError::Input)?;
                let cleared = self.clear_pose();
                self.initial = Some((pose, fre));
                self.pose = Some(pose);
                Ok(json!({ "pose": pose_json(&pose), "fre": fre, "cleared": cleared }))
            }
            Command::SetRoi { lower, upper } => {
                let Some(vol) = &self.volume else { return stage("load a volume before setting the ROI") };
                let roi = RoiBox { lower: *lower, upper: *upper };
                roi.validate(vol.volume.dims()).map_err(|e| SessionError::Input(e.to_string()))?;
                self.roi = Some(roi);
                let count = self.refresh_points()?;
                Ok(json!({ "roi": { "lower": lower, "upper": upper }, "point_count": count }))
            }
            Command::SetThreshold { value } => {
                if self.volume.is_none() {
                    return stage("load a volume before thresholding");
                }
                if !value.is_finite() {
                    return input("threshold must be finite");
                }
                self.threshold = Some(*value);
                let count = self.refresh_points()?;
                Ok(json!({ "threshold": value, "point_count": count, "preview": self.preview() }))
            }
            Command::RunIcp => {
                let (Some(_), Some(pose)) = (self.initial, self.pose) else {
                    return stage("run-icp needs an initial transform: run register-initial first");
                };
                let Some(points) = &self.points else { return stage("run-icp needs thresholded points: set a threshold first") };
                let (pose, result) = refine_pose(&self.config, points, &pose, &self.icp_params, self.points_per_hole)
                    .map_err(|e| SessionError::Stage(format!("icp failed: {e}")))?;
                let summary = icp_summary(&result);
                self.pose = Some(pose);
                self.icp = Some(summary);
                let cleared = if self.plan.take().is_some() { vec!["plan"] } else { vec![] };
                Ok(json!({
                    "pose": pose_json(&pose),
                    "icp": { "iterations": summary.iterations, "final_mse": summary.final_mse, "termination": summary.termination },
                    "mse_trace": result.mse_trace,
                    "cleared": cleared,
                }))
            }
            Command::NudgePose { rotation_deg, translation } => {
                let Some(pose) = self.pose else { return stage("nudge-pose needs a pose: run register-initial first") };
                if !(rotation_deg.iter().all(|a| a.is_finite()) && translation.is_finite()) {
                    return input("nudge must be finite");
                }
                let [rx, ry, rz] = rotation_deg.map(f64::to_radians);
                let delta = RigidTransform::new(UnitQuaternion::from_euler_xyz(rx, ry, rz), *translation);
                let pose = pose.compose(&delta);
                self.pose = Some(pose);
                let cleared = if self.plan.take().is_some() { vec!["plan"] } else { vec![] };
                Ok(json!({ "pose": pose_json(&pose), "cleared": cleared }))
            }
            Command::SetTumor(spec) => {
                let source = match spec {
                    TumorSpec::MeshPath { mesh_path } => TumorSource::MeshFile(mesh_path.clone()),
                    TumorSpec::LabelPath { label_path, iso } => TumorSource::LabelFile { path: label_path.clone(), iso: *iso },
                    TumorSpec::Mesh { mesh } => TumorSource::Mesh(mesh.clone().into_mesh().map_err(|e| SessionError::Input(e.to_string()))?),
                };
                let tree = source.load().and_then(|s| s.build_tree()).map_err(SessionError::Input)?;
                let triangles = tree.mesh().triangle_count();
                self.tumor = Some(Tumor { tree: Arc::new(tree) });
                let cleared = if self.plan.take().is_some() { vec!["plan"] } else { vec![] };
                Ok(json!({ "tumor": { "triangles": triangles }, "cleared": cleared }))
            }
            Command::SelectNeedles { depth } => {
                let Some(pose) = self.pose else { return stage("select-needles needs a pose: register first") };
                let Some(tumor) = &self.tumor else { return stage("select-needles needs a tumor: run set-tumor first") };
                let provenance = Provenance {
                    volume_id: self.volume.as_ref().map(|v| v.id.clone()).unwrap_or_default(),
                    landmarks: self.landmark_pairs(),
                    icp: self.icp,
                    config_hash: config_hash(&self.config),
                };
                let plan = build_plan(&self.config, pose, *depth, &tumor.tree, provenance).map_err(SessionError::Input)?;
                let selected: Vec<String> = plan.selected_ids().into_iter().map(String::from).collect();
                self.plan = Some(plan);
                Ok(json!({ "depth": depth, "selected": selected }))
            }
            Command::ToggleNeedle { id } => {
                let Some(plan) = &mut self.plan else { return stage("no plan: run select-needles first") };
                let Some(n) = plan.needle_mut(id) else { return input(format!("unknown hole id {id:?}")) };
                n.selected = !n.selected;
                Ok(json!({ "needle": { "hole_id": id, "selected": n.selected } }))
            }
            Command::SetDepth { id, depth } => {
                let max = self.config.max_needle_length;
                let Some(plan) = &mut self.plan else { return stage("no plan: run select-needles first") };
                let Some(n) = plan.needle_mut(id) else { return input(format!("unknown hole id {id:?}")) };
                if !(*depth > 0.0 && *depth <= max) {
                    return input(format!("depth {depth} must lie in (0, {max}]"));
                }
                n.depth = *depth;
                Ok(json!({ "needle": { "hole_id": id, "depth": depth } }))
            }
            Command::ExportPlan { .. } => input("export-plan does not modify the session"),
        }
    }

    /// Summary of the whole session state.
    pub fn state(&self) -> Value {
        let volume = self.volume.as_ref().map(|v| {
            let (lo, hi) = v.volume.value_range();
            json!({ "id": v.id, "dims": v.volume.dims(), "spacing": v.volume.spacing(), "origin": v.volume.origin(), "range": [lo, hi] })
        });
        let landmarks: Vec<Value> = self
            .landmarks
            .iter()
            .map(|(i, s)| json!({ "index": i, "feature": s.feature, "point": s.point }))
            .collect();
        json!({
            "id": self.id,
            "revision": self.revision,
            "busy": self.busy,
            "config": *self.config,
            "volume": volume,
            "landmarks": landmarks,
            "initial": self.initial.map(|(p, fre)| json!({ "pose": pose_json(&p), "fre": fre })),
            "roi": self.roi.map(|r| json!({ "lower": r.lower, "upper": r.upper })),
            "threshold": self.threshold,
            "point_count": self.points.as_ref().map(|p| p.len()),
            "icp": self.icp.map(|s| json!({ "iterations": s.iterations, "final_mse": s.final_mse, "termination": s.termination })),
            "pose": self.pose.map(|p| pose_json(&p)),
            "tumor": self.tumor.as_ref().map(|t| json!({ "triangles": t.tree.mesh().triangle_count() })),
            "plan": self.plan.as_ref().map(|p| json!({
                "selected": p.selected_ids(),
                "needles": p.needles.iter().map(|n| json!({ "hole_id": n.hole_id, "selected": n.selected, "depth": n.depth })).collect::<Vec<_>>(),
            })),
        })
    }

    /// Posed scene meshes in image coordinates: `template`, `obturator`,
    /// `tumor`, or `needles` (the selected needles of the plan).
    pub fn mesh(&self, kind: &str) -> Result<TriangleMesh, SessionError> {
        let pose = self.pose.unwrap_or(RigidTransform::IDENTITY);
        match kind {
            "template" => Ok(template_mesh(&self.config).transformed(&pose)),
            "obturator" => Ok(obturator_mesh(&self.config).transformed(&pose)),
            "tumor" => match &self.tumor {
                Some(t) => Ok(t.tree.mesh().clone()),
                None => stage("no tumor loaded"),
            },
            "needles" => {
                let mut all = TriangleMesh::default();
                if let Some(plan) = &self.plan {
                    let holes = hole_grid(&self.config);
                    for n in plan.needles.iter().filter(|n| n.selected) {
                        let hole = holes.iter().find(|h| h.id == n.hole_id).expect("plan ids come from the config");
                        let (_, m) = needle_geometry(hole, n.depth, n.radius, self.config.needle_sides as usize)
                            .map_err(|e| SessionError::Input(e.to_string()))?;
                        all.append(&m);
                    }
                }
                Ok(all.transformed(&pose))
            }
            other => input(format!("unknown mesh {other:?}")),
        }
    }

    /// Sections of the scene meshes through the voxel-center plane `index`
    /// of `axis`.
    pub fn contours(&self, axis: Axis, index: usize) -> Result<Value, SessionError> {
        let Some(vol) = &self.volume else { return stage("no volume loaded") };
        let vol = &vol.volume;
        let a = axis.normal_index();
        let dims = vol.dims();
        let voxel_axis = match axis {
            Axis::Sagittal => 0,
            Axis::Coronal => 1,
            Axis::Axial => 2,
        };
        if index >= dims[voxel_axis] {
            return input(format!("slice {index} is outside 0..{}", dims[voxel_axis]));
        }
        let mut ijk = [0usize; 3];
        ijk[voxel_axis] = index;
        let offset = vol.voxel_center(ijk[0], ijk[1], ijk[2])[a];
        let plane = SlicePlane { axis, offset };
        let mut objects = serde_json::Map::new();
        for kind in ["template", "obturator", "tumor", "needles"] {
            if kind == "tumor" && self.tumor.is_none() {
                continue;
            }
            let mesh = self.mesh(kind)?;
            let lines: Vec<Polyline> = mesh_plane_contours(&mesh, &RigidTransform::IDENTITY, plane);
            objects.insert(kind.to_string(), serde_json::to_value(lines).expect("polylines serialize"));
        }
        Ok(json!({ "axis": axis, "index": index, "offset": offset, "objects": objects }))
    }

    /// Window/levelled 8-bit grayscale PNG of voxel plane `index` of `axis`.
    /// Rows run from high to low along the vertical axis so that superior
    /// (or anterior, for axial) is up.
    pub fn slice_png(&self, axis: Axis, index: usize, window: Option<f64>, level: Option<f64>) -> Result<Vec<u8>, SessionError> {
        let Some(vol) = &self.volume else { return stage("no volume loaded") };
        let vol = &vol.volume;
        let [nx, ny, nz] = vol.dims();
        let (lo, hi) = vol.value_range();
        let window = window.unwrap_or(hi - lo).max(1e-12);
        let level = level.unwrap_or(0.5 * (lo + hi));
        if !(window.is_finite() && level.is_finite()) {
            return input("window and level must be finite");
        }
        let (w, h, limit) = match axis {
            Axis::Axial => (nx, ny, nz),
            Axis::Sagittal => (ny, nz, nx),
            Axis::Coronal => (nx, nz, ny),
        };
        if index >= limit {
            return input(format!("slice {index} is outside 0..{limit}"));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for row in 0..h {
            let v = h - 1 - row;
            for u in 0..w {
                let value = match axis {
                    Axis::Axial => vol.value(u, v, index),
                    Axis::Sagittal => vol.value(index, u, v),
                    Axis::Coronal => vol.value(u, index, v),
                };
                let g = ((value - (level - 0.5 * window)) / window * 255.0).round().clamp(0.0, 255.0);
                pixels.push(g as u8);
            }
        }
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut writer = enc.write_header().map_err(|e| SessionError::Input(e.to_string()))?;
            writer.write_image_data(&pixels).map_err(|e| SessionError::Input(e.to_string()))?;
        }
        Ok(out)
    }
}
