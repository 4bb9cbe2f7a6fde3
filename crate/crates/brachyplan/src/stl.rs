//! STL reading and writing (binary and ASCII).
//!
//! Reading welds vertices closer than [`WELD_TOLERANCE`] into a shared index
//! buffer and drops zero-area facets, reporting how many were dropped.
//! Coordinates are stored as `f32` in both encodings; values that are exactly
//! representable as `f32` roundtrip bit-for-bit.

use brachyplan_core::{TriangleMesh, Vec3};

pub const WELD_TOLERANCE: f64 = 1e-6;

const HEADER_LEN: usize = 80;
const RECORD_LEN: usize = 50;

#[derive(Debug, thiserror::Error)]
pub enum StlError {
    #[error("truncated binary STL: {needed} bytes needed at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("binary STL declares {declared} triangles ({expected} bytes) but the file has {actual} bytes")]
    CountMismatch { declared: u32, expected: usize, actual: usize },
    #[error("non-finite coordinate at byte offset {offset}")]
    NonFinite { offset: usize },
    #[error("line {line}: {message}")]
    Ascii { line: usize, message: String },
}

/// Result of [`read_stl`].
#[derive(Debug, Clone)]
pub struct StlMesh {
    pub mesh: TriangleMesh,
    /// Zero-area facets removed after welding.
    pub dropped_degenerate: usize,
}

/// Parses binary or ASCII STL.
///
/// A file starting with `solid` is treated as ASCII unless its length matches
/// the binary layout implied by the count at byte 80 (some exporters write
/// `solid` into the binary header).
pub fn read_stl(bytes: &[u8]) -> Result<StlMesh, StlError> {
    let facets = if looks_ascii(bytes) { parse_ascii(bytes)? } else { parse_binary(bytes)? };
    let (mesh, dropped_degenerate) = TriangleMesh::from_soup(&facets, WELD_TOLERANCE)
        .expect("facet coordinates were checked for finiteness");
    Ok(StlMesh { mesh, dropped_degenerate })
}

fn looks_ascii(bytes: &[u8]) -> bool {
    let start = bytes.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(bytes.len());
    if !bytes[start..].starts_with(b"solid") {
        return false;
    }
    if bytes.len() >= HEADER_LEN + 4 {
        let count = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap()) as usize;
        if HEADER_LEN + 4 + count.saturating_mul(RECORD_LEN) == bytes.len() {
            return false;
        }
    }
    true
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>, StlError> {
    if bytes.len() < HEADER_LEN + 4 {
        return Err(StlError::Truncated { offset: bytes.len(), needed: HEADER_LEN + 4 - bytes.len() });
    }
    let declared = u32::from_le_bytes(bytes[HEADER_LEN..HEADER_LEN + 4].try_into().unwrap());
    let expected = (declared as usize).checked_mul(RECORD_LEN).and_then(|n| n.checked_add(HEADER_LEN + 4));
    if expected != Some(bytes.len()) {
        let expected = expected.unwrap_or(usize::MAX);
        if bytes.len() < expected && (bytes.len() - HEADER_LEN - 4) % RECORD_LEN != 0 {
            let offset = bytes.len();
            return Err(StlError::Truncated { offset, needed: RECORD_LEN - (offset - HEADER_LEN - 4) % RECORD_LEN });
        }
        return Err(StlError::CountMismatch { declared, expected, actual: bytes.len() });
    }
    let mut facets = Vec::with_capacity(declared as usize);
    for t in 0..declared as usize {
        let base = HEADER_LEN + 4 + t * RECORD_LEN;
        let mut facet = [Vec3::ZERO; 3];
        for (v, slot) in facet.iter_mut().enumerate() {
            let at = base + 12 + 12 * v;
            let c = |k: usize| f32::from_le_bytes(bytes[at + 4 * k..at + 4 * k + 4].try_into().unwrap()) as f64;
            *slot = Vec3::new(c(0), c(1), c(2));
            if !slot.is_finite() {
                return Err(StlError::NonFinite { offset: at });
            }
        }
        facets.push(facet);
    }
    Ok(facets)
}

struct Tokens<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    current: std::str::SplitWhitespace<'a>,
    line: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Option<(&'a str, usize)> {
        loop {
            if let Some(t) = self.current.next() {
                return Some((t, self.line));
            }
            let (n, l) = self.lines.next()?;
            self.line = n + 1;
            self.current = l.split_whitespace();
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, StlError> {
        Err(StlError::Ascii { line: self.line, message: message.into() })
    }

    fn expect(&mut self, word: &str) -> Result<(), StlError> {
        match self.next() {
            Some((t, _)) if t == word => Ok(()),
            Some((t, _)) => self.fail(format!("expected `{word}`, found `{t}`")),
            None => self.fail(format!("expected `{word}`, found end of file")),
        }
    }

    fn number(&mut self) -> Result<f64, StlError> {
        match self.next() {
            Some((t, _)) => match t.parse::<f32>() {
                Ok(v) if v.is_finite() => Ok(v as f64),
                _ => self.fail(format!("invalid number `{t}`")),
            },
            None => self.fail("expected a number, found end of file"),
        }
    }

    /// Skips the rest of the current line (solid names).
    fn skip_line(&mut self) {
        self.current = "".split_whitespace();
    }
}

fn parse_ascii(bytes: &[u8]) -> Result<Vec<[Vec3; 3]>, StlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        StlError::Ascii { line, message: "invalid UTF-8".into() }
    })?;
    let mut tok = Tokens { lines: text.lines().enumerate(), current: "".split_whitespace(), line: 0 };
    tok.expect("solid")?;
    tok.skip_line();
    let mut facets = Vec::new();
    loop {
        match tok.next() {
            Some(("facet", _)) => {}
            Some(("endsolid", _)) => break,
            Some((t, _)) => return tok.fail(format!("expected `facet` or `endsolid`, found `{t}`")),
            None => return tok.fail("missing `endsolid`"),
        }
        tok.expect("normal")?;
        for _ in 0..3 {
            tok.number()?;
        }
        tok.expect("outer")?;
        tok.expect("loop")?;
        let mut facet = [Vec3::ZERO; 3];
        for slot in &mut facet {
            tok.expect("vertex")?;
            *slot = Vec3::new(tok.number()?, tok.number()?, tok.number()?);
        }
        tok.expect("endloop")?;
        tok.expect("endfacet")?;
        facets.push(facet);
    }
    Ok(facets)
}

fn facet_normal(mesh: &TriangleMesh, t: usize) -> [f32; 3] {
    let n = mesh.face_normal(t).unwrap_or(Vec3::ZERO);
    [n.x as f32, n.y as f32, n.z as f32]
}

/// Binary STL with a zero header and zero attribute words.
pub fn write_stl_binary(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 + RECORD_LEN * mesh.triangle_count());
    out.extend_from_slice(&[0u8; HEADER_LEN]);
    out.extend_from_slice(&(mesh.triangle_count() as u32).to_le_bytes());
    for t in 0..mesh.triangle_count() {
        for c in facet_normal(mesh, t) {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for v in mesh.triangle(t) {
            for c in [v.x, v.y, v.z] {
                out.extend_from_slice(&(c as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&0u16.to_le_bytes());
    }
    out
}

/// ASCII STL. Coordinates are printed as the shortest decimal that parses
/// back to the same `f32`.
pub fn write_stl_ascii(mesh: &TriangleMesh, name: &str) -> Vec<u8> {
    use std::fmt::Write;
    let mut s = String::new();
    let _ = writeln!(s, "solid {name}");
    for t in 0..mesh.triangle_count() {
        let [nx, ny, nz] = facet_normal(mesh, t);
        let _ = writeln!(s, "  facet normal {nx:e} {ny:e} {nz:e}");
        s.push_str("    outer loop\n");
        for v in mesh.triangle(t) {
            let _ = writeln!(s, "      vertex {:e} {:e} {:e}", v.x as f32, v.y as f32, v.z as f32);
        }
        s.push_str("    endloop\n  endfacet\n");
    }
    let _ = writeln!(s, "endsolid {name}");
    s.into_bytes()
}
