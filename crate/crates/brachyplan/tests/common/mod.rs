#![allow(dead_code)]

use std::path::PathBuf;

use brachyplan::phantom::{generate_phantom, PhantomParams, PhantomScene};
use brachyplan::pipeline::PipelineRequest;
use brachyplan::{nrrd, stl};
use brachyplan_core::applicator::LandmarkPair;

pub const DEPTH: f64 = 80.0;

/// Default phantom written to a temporary directory.
pub struct Case {
    pub params: PhantomParams,
    pub scene: PhantomScene,
    pub dir: tempfile::TempDir,
    pub volume_path: PathBuf,
    pub tumor_path: PathBuf,
    pub label_path: PathBuf,
}

impl Case {
    pub fn new() -> Self {
        let params = PhantomParams::default();
        let scene = generate_phantom(&params).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let volume_path = dir.path().join("volume.nrrd");
        let tumor_path = dir.path().join("tumor.stl");
        let label_path = dir.path().join("tumor-label.nrrd");
        std::fs::write(&volume_path, nrrd::write_nrrd(&scene.volume)).unwrap();
        std::fs::write(&tumor_path, stl::write_stl_binary(&scene.tumor_mesh)).unwrap();
        std::fs::write(&label_path, nrrd::write_nrrd(&scene.tumor_label)).unwrap();
        Case { params, scene, dir, volume_path, tumor_path, label_path }
    }

    pub fn landmarks(&self) -> Vec<LandmarkPair> {
        let t = &self.scene.landmark_truth;
        t.source().iter().zip(t.target()).map(|(&source, &target)| LandmarkPair { source, target }).collect()
    }

    /// Feature ids of the config landmarks, in the order of `landmarks()`.
    pub fn features(&self) -> Vec<String> {
        self.params.config.landmarks.iter().map(|l| l.id.clone()).collect()
    }

    pub fn request(&self) -> PipelineRequest {
        let mut r = PipelineRequest::new(self.params.config.clone(), self.landmarks(), self.scene.threshold, DEPTH);
        r.roi = Some(self.scene.roi);
        r
    }
}
