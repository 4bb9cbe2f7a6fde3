use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{hole_label, ApplicatorError};
use crate::geom::Vec3;

/// Named model-frame point the operator can locate in the image.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct LandmarkFeature {
    pub id: String,
    pub point: Vec3,
}

/// Template and obturator dimensions (mm) plus needle defaults.
///
/// The default is a 13×13 grid at 10 mm pitch with 1.65 mm holes in a
/// 140×140×20 mm plate, a 10 mm central obturator opening and a 120 mm
/// obturator of radius 9 mm. Needles default to 0.85 mm radius (a 1.7 mm
/// catheter) and 12-sided tessellation.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TemplateConfig {
    pub rows: u32,
    pub cols: u32,
    pub pitch: f64,
    pub hole_radius: f64,
    /// Plate extent along x.
    pub plate_width: f64,
    /// Plate extent along y.
    pub plate_height: f64,
    pub plate_thickness: f64,
    /// Radius of the central opening; 0 disables it and the hole exclusion.
    pub obturator_hole_radius: f64,
    pub obturator_length: f64,
    pub obturator_radius: f64,
    /// Polygon sides used for bores and the obturator.
    pub bore_sides: u32,
    pub needle_radius: f64,
    pub needle_sides: u32,
    pub max_needle_length: f64,
    pub landmarks: Vec<LandmarkFeature>,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        let mut config = TemplateConfig {
            rows: 13,
            cols: 13,
            pitch: 10.0,
            hole_radius: 1.65,
            plate_width: 140.0,
            plate_height: 140.0,
            plate_thickness: 20.0,
            obturator_hole_radius: 10.0,
            obturator_length: 120.0,
            obturator_radius: 9.0,
            bore_sides: 12,
            needle_radius: 0.85,
            needle_sides: 12,
            max_needle_length: 200.0,
            landmarks: Vec::new(),
        };
        config.landmarks = config.corner_landmarks();
        config
    }
}

impl TemplateConfig {
    /// Lattice position of the hole in `row` (0 = `A`) and `col` (0-based).
    pub fn hole_position(&self, row: u32, col: u32) -> Vec3 {
        let x = (col as f64 - (self.cols - 1) as f64 / 2.0) * self.pitch;
        let y = ((self.rows - 1) as f64 / 2.0 - row as f64) * self.pitch;
        Vec3::new(x, y, 0.0)
    }

    /// Entry points of the top-left, top-right and bottom-left corner holes,
    /// labelled with their hole ids.
    pub fn corner_landmarks(&self) -> Vec<LandmarkFeature> {
        let (r, c) = (self.rows.max(1) - 1, self.cols.max(1) - 1);
        [(0, 0), (0, c), (r, 0)]
            .into_iter()
            .map(|(row, col)| LandmarkFeature { id: hole_label(row, col), point: self.hole_position(row, col) })
            .collect()
    }

    pub fn landmark(&self, id: &str) -> Option<&LandmarkFeature> {
        self.landmarks.iter().find(|l| l.id == id)
    }

    pub fn validate(&self) -> Result<(), ApplicatorError> {
        let bad = |msg: &str| Err(ApplicatorError::InvalidConfig(msg.to_string()));
        let reals = [
            self.pitch,
            self.hole_radius,
            self.plate_width,
            self.plate_height,
            self.plate_thickness,
            self.obturator_hole_radius,
            self.obturator_length,
            self.obturator_radius,
            self.needle_radius,
            self.max_needle_length,
        ];
        if reals.iter().any(|v| !v.is_finite()) {
            return bad("dimensions must be finite");
        }
        if self.rows == 0 || self.cols == 0 || self.rows > 26 {
            return bad("rows must be in 1..=26 and cols at least 1");
        }
        if self.hole_radius < 0.0 || self.obturator_hole_radius < 0.0 || self.needle_radius < 0.0 {
            return bad("radii must be non-negative");
        }
        if self.obturator_radius <= 0.0 || self.obturator_length <= 0.0 || self.max_needle_length <= 0.0 {
            return bad("obturator and needle lengths and the obturator radius must be positive");
        }
        if self.pitch <= 2.0 * self.hole_radius {
            return bad("pitch must exceed twice the hole radius");
        }
        if self.plate_thickness <= 0.0 {
            return bad("plate thickness must be positive");
        }
        if self.plate_width < self.cols as f64 * self.pitch || self.plate_height < self.rows as f64 * self.pitch {
            return bad("plate must cover the hole lattice (cols·pitch by rows·pitch)");
        }
        let lattice_half = 0.5 * self.pitch * self.rows.min(self.cols) as f64;
        if self.obturator_hole_radius >= lattice_half * (1.0 - 1e-6) {
            return bad("obturator opening must fit inside the hole lattice");
        }
        if self.bore_sides < 3 || self.needle_sides < 3 {
            return bad("polygon side counts must be at least 3");
        }
        if self.landmarks.len() != 3 {
            return bad("exactly three landmark features are required");
        }
        for (i, l) in self.landmarks.iter().enumerate() {
            if l.id.is_empty() || self.landmarks[..i].iter().any(|m| m.id == l.id) {
                return Err(ApplicatorError::InvalidConfig(format!("landmark id {:?} is empty or repeated", l.id)));
            }
            if !(l.point.x.is_finite() && l.point.y.is_finite() && l.point.z.is_finite()) {
                return bad("landmark points must be finite");
            }
        }
        let [a, b, c] = [0, 1, 2].map(|k| self.landmarks[k].point);
        let span = (b - a).norm().max((c - a).norm()).max(1e-300);
        if (b - a).cross(c - a).norm() <= 1e-9 * span * span {
            return bad("landmark features are collinear");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = TemplateConfig::default();
        c.validate().unwrap();
        let ids: Vec<&str> = c.landmarks.iter().map(|l| l.id.as_str()).collect();
        assert_eq!(ids, ["A1", "A13", "M1"]);
        assert_eq!(c.landmarks[0].point, Vec3::new(-60.0, 60.0, 0.0));
    }

    #[test]
    fn rejects_tight_pitch_and_small_plate() {
        let c = TemplateConfig { pitch: 3.0, ..TemplateConfig::default() };
        assert!(c.validate().is_err());
        let c = TemplateConfig { plate_width: 100.0, ..TemplateConfig::default() };
        assert!(c.validate().is_err());
        let mut c = TemplateConfig::default();
        c.landmarks[2].point = Vec3::new(0.0, 60.0, 0.0);
        assert!(c.validate().is_err());
    }
}
