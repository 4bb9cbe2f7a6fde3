use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::TemplateConfig;
use crate::geom::Vec3;

/// One template hole in the model frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Hole {
    pub id: String,
    pub row: u32,
    pub col: u32,
    /// On the superior surface (`z = 0`).
    pub entry: Vec3,
    /// Unit insertion direction.
    pub direction: Vec3,
}

/// `A1`, `A2`, … with the row letter first and a 1-based column number.
pub fn hole_label(row: u32, col: u32) -> String {
    format!("{}{}", char::from(b'A' + row as u8), col + 1)
}

/// Row-major lattice of holes centered on the plate. When the config has a
/// central opening, holes whose entry lies within
/// `obturator_hole_radius + hole_radius` of the center are left out.
pub fn hole_grid(config: &TemplateConfig) -> Vec<Hole> {
    let limit = config.obturator_hole_radius + config.hole_radius;
    let mut holes = Vec::with_capacity((config.rows * config.cols) as usize);
    for row in 0..config.rows {
        for col in 0..config.cols {
            let entry = config.hole_position(row, col);
            if config.obturator_hole_radius > 0.0 && entry.norm() <= limit {
                continue;
            }
            holes.push(Hole { id: hole_label(row, col), row, col, entry, direction: -Vec3::Z });
        }
    }
    holes
}
