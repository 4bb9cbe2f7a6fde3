//! JSON documents: template config, landmarks, poses, meshes and plans.
//!
//! Plan JSON is canonical: fixed field order, pretty printed, every float
//! rounded to 9 significant digits. The rotation is stored as `[w, x, y, z]`.
//! Its largest-magnitude component is recomputed from the other three after
//! rounding, which keeps the quaternion unit to within 1e-9. As a result,
//! exporting an imported plan reproduces the input bytes.

use brachyplan_core::applicator::{
    IcpSummary, LandmarkPair, NeedleState, Plan, Provenance, TemplateConfig, PLAN_SCHEMA_VERSION,
};
use brachyplan_core::registration::Termination;
use brachyplan_core::{RigidTransform, TriangleMesh, UnitQuaternion, Vec3};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported plan schema version {found} (expected {PLAN_SCHEMA_VERSION})")]
    Version { found: String },
    #[error("invalid document: {0}")]
    Invalid(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads and validates a template config. Missing fields take defaults.
pub fn read_config(bytes: &[u8]) -> Result<TemplateConfig, FormatError> {
    let config: TemplateConfig = serde_json::from_slice(bytes)?;
    config.validate().map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(config)
}

pub fn write_config(config: &TemplateConfig) -> Vec<u8> {
    serde_json::to_vec_pretty(config).expect("config serializes")
}

/// Hash of the compact JSON encoding of `config`.
pub fn config_hash(config: &TemplateConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("config serializes"))
}

/// One landmark in a landmarks file: either a named model feature with its
/// image position, or an explicit model/image point pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LandmarkSpec {
    Feature { feature: String, point: Vec3 },
    Pair { source: Vec3, target: Vec3 },
}

pub fn read_landmarks(bytes: &[u8]) -> Result<Vec<LandmarkSpec>, FormatError> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn write_landmarks(specs: &[LandmarkSpec]) -> Vec<u8> {
    serde_json::to_vec_pretty(specs).expect("landmarks serialize")
}

/// Model/image pairs for `specs`, looking feature ids up in `config`.
pub fn resolve_landmarks(specs: &[LandmarkSpec], config: &TemplateConfig) -> Result<Vec<LandmarkPair>, FormatError> {
    specs
        .iter()
        .map(|s| match s {
            LandmarkSpec::Feature { feature, point } => config
                .landmark(feature)
                .map(|f| LandmarkPair { source: f.point, target: *point })
                .ok_or_else(|| FormatError::Invalid(format!("unknown landmark feature {feature:?}"))),
            LandmarkSpec::Pair { source, target } => Ok(LandmarkPair { source: *source, target: *target }),
        })
        .collect()
}

pub fn read_pose(bytes: &[u8]) -> Result<RigidTransform, FormatError> {
    Ok(serde_json::from_slice(bytes)?)
}

pub fn write_pose(pose: &RigidTransform) -> Vec<u8> {
    serde_json::to_vec_pretty(pose).expect("pose serializes")
}

/// Indexed mesh JSON `{vertices: [[x, y, z], ...], triangles: [[a, b, c], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshJson {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl From<&TriangleMesh> for MeshJson {
    fn from(m: &TriangleMesh) -> Self {
        MeshJson { vertices: m.vertices.clone(), triangles: m.triangles.clone() }
    }
}

impl MeshJson {
    pub fn into_mesh(self) -> Result<TriangleMesh, FormatError> {
        TriangleMesh::new(self.vertices, self.triangles).map_err(|e| FormatError::Invalid(e.to_string()))
    }
}

/// Rounds to 9 significant digits.
pub fn round9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_vec(v: Vec3) -> [f64; 3] {
    [round9(v.x), round9(v.y), round9(v.z)]
}

fn round_quaternion(q: &UnitQuaternion) -> [f64; 4] {
    let mut c = q.to_array().map(round9);
    let big = (0..4).max_by(|&a, &b| c[a].abs().total_cmp(&c[b].abs()).then(b.cmp(&a))).unwrap();
    let rest: f64 = (0..4).filter(|&k| k != big).map(|k| c[k] * c[k]).sum();
    c[big] = round9((1.0 - rest).max(0.0).sqrt()).copysign(c[big]);
    c
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PoseDto {
    rotation: [f64; 4],
    translation: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NeedleDto {
    hole_id: String,
    selected: bool,
    depth: f64,
    radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LandmarkDto {
    source: [f64; 3],
    target: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IcpDto {
    iterations: usize,
    final_mse: f64,
    termination: Termination,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProvenanceDto {
    volume_id: String,
    landmarks: Vec<LandmarkDto>,
    icp: Option<IcpDto>,
    config_hash: String,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDto {
    schema_version: u32,
    pose: PoseDto,
    needles: Vec<NeedleDto>,
    provenance: ProvenanceDto,
}

/// Canonical plan JSON.
pub fn export_plan(plan: &Plan) -> Vec<u8> {
    let p = &plan.provenance;
    let dto = PlanDto {
        schema_version: plan.schema_version,
        pose: PoseDto { rotation: round_quaternion(&plan.pose.rotation), translation: round_vec(plan.pose.translation) },
        needles: plan
            .needles
            .iter()
            .map(|n| NeedleDto { hole_id: n.hole_id.clone(), selected: n.selected, depth: round9(n.depth), radius: round9(n.radius) })
            .collect(),
        provenance: ProvenanceDto {
            volume_id: p.volume_id.clone(),
            landmarks: p.landmarks.iter().map(|l| LandmarkDto { source: round_vec(l.source), target: round_vec(l.target) }).collect(),
            icp: p.icp.map(|i| IcpDto { iterations: i.iterations, final_mse: round9(i.final_mse), termination: i.termination }),
            config_hash: p.config_hash.clone(),
        },
    };
    let mut out = serde_json::to_vec_pretty(&dto).expect("plan serializes");
    out.push(b'\n');
    out
}

/// Parses plan JSON, checking the schema version before anything else, and
/// validates it (against `config` when given).
pub fn import_plan(bytes: &[u8], config: Option<&TemplateConfig>) -> Result<Plan, FormatError> {
    let value: serde_json::Value = serde_json::from_slice(bytes)?;
    match value.get("schema_version") {
        Some(v) if v.as_u64() == Some(PLAN_SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(FormatError::Version { found: v.to_string() }),
        None => return Err(FormatError::Version { found: "none".into() }),
    }
    let dto: PlanDto = serde_json::from_value(value)?;
    let [w, x, y, z] = dto.pose.rotation;
    let rotation = UnitQuaternion::new(w, x, y, z).map_err(|e| FormatError::Invalid(e.to_string()))?;
    let vec = |a: [f64; 3]| Vec3::try_new(a[0], a[1], a[2]).ok_or_else(|| FormatError::Invalid("non-finite coordinate".into()));
    let plan = Plan {
        schema_version: dto.schema_version,
        pose: RigidTransform::new(rotation, vec(dto.pose.translation)?),
        needles: dto
            .needles
            .into_iter()
            .map(|n| NeedleState { hole_id: n.hole_id, selected: n.selected, depth: n.depth, radius: n.radius })
            .collect(),
        provenance: Provenance {
            volume_id: dto.provenance.volume_id,
            landmarks: dto
                .provenance
                .landmarks
                .into_iter()
                .map(|l| Ok(LandmarkPair { source: vec(l.source)?, target: vec(l.target)? }))
                .collect::<Result<_, FormatError>>()?,
            icp: dto.provenance.icp.map(|i| IcpSummary { iterations: i.iterations, final_mse: i.final_mse, termination: i.termination }),
            config_hash: dto.provenance.config_hash,
        },
    };
    match config {
        Some(c) => plan.validate_for(c),
        None => plan.validate(),
    }
    .map_err(|e| FormatError::Invalid(e.to_string()))?;
    Ok(plan)
}
