use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{hole_grid, ApplicatorError, TemplateConfig};
use crate::geom::{RigidTransform, Vec3};
use crate::registration::Termination;

pub const PLAN_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct NeedleState {
    pub hole_id: String,
    pub selected: bool,
    /// Insertion depth (mm) measured from the superior surface.
    pub depth: f64,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandmarkPair {
    /// Model frame.
    pub source: Vec3,
    /// Image frame.
    pub target: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IcpSummary {
    pub iterations: usize,
    pub final_mse: f64,
    pub termination: Termination,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Provenance {
    pub volume_id: String,
    pub landmarks: Vec<LandmarkPair>,
    pub icp: Option<IcpSummary>,
    pub config_hash: String,
}

/// Template pose (model → image) with per-hole needle states.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub schema_version: u32,
    pub pose: RigidTransform,
    pub needles: Vec<NeedleState>,
    pub provenance: Provenance,
}

impl Plan {
    pub fn new(pose: RigidTransform) -> Self {
        Plan { schema_version: PLAN_SCHEMA_VERSION, pose, needles: Vec::new(), provenance: Provenance::default() }
    }

    /// Unselected needles at `depth` for every hole of `config`.
    pub fn for_config(config: &TemplateConfig, pose: RigidTransform, depth: f64) -> Self {
        let mut plan = Plan::new(pose);
        plan.needles = hole_grid(config)
            .into_iter()
            .map(|h| NeedleState { hole_id: h.id, selected: false, depth, radius: config.needle_radius })
            .collect();
        plan
    }

    pub fn selected_ids(&self) -> Vec<&str> {
        self.needles.iter().filter(|n| n.selected).map(|n| n.hole_id.as_str()).collect()
    }

    pub fn needle_mut(&mut self, id: &str) -> Option<&mut NeedleState> {
        self.needles.iter_mut().find(|n| n.hole_id == id)
    }

    /// Checks invariants that need no config: version, unique ids, finite
    /// non-negative depths and radii.
    pub fn validate(&self) -> Result<(), ApplicatorError> {
        if self.schema_version != PLAN_SCHEMA_VERSION {
            return Err(ApplicatorError::InvalidPlan(format!("schema version {}", self.schema_version)));
        }
        let mut seen = BTreeSet::new();
        for n in &self.needles {
            if !seen.insert(n.hole_id.as_str()) {
                return Err(ApplicatorError::InvalidPlan(format!("duplicate needle {:?}", n.hole_id)));
            }
            if !(n.depth >= 0.0 && n.depth.is_finite() && n.radius >= 0.0 && n.radius.is_finite()) {
                return Err(ApplicatorError::InvalidPlan(format!("needle {:?} has invalid depth or radius", n.hole_id)));
            }
        }
        Ok(())
    }

    /// [`Plan::validate`] plus: every needle names a hole of `config` and its
    /// depth is within the configured maximum.
    pub fn validate_for(&self, config: &TemplateConfig) -> Result<(), ApplicatorError> {
        self.validate()?;
        let ids: BTreeSet<String> = hole_grid(config).into_iter().map(|h| h.id).collect();
        for n in &self.needles {
            if !ids.contains(&n.hole_id) {
                return Err(ApplicatorError::UnknownHole(n.hole_id.clone()));
            }
            if n.depth > config.max_needle_length {
                return Err(ApplicatorError::InvalidPlan(format!(
                    "needle {:?} depth {} exceeds {}",
                    n.hole_id, n.depth, config.max_needle_length
                )));
            }
        }
        Ok(())
    }
}
