//! NRRD subset: `NRRD0004`, dimension 3, uint8/int16/uint16/float32,
//! raw little-endian data attached after the header.
//!
//! World coordinates are RAS. Headers in `left-posterior-superior` space are
//! converted on read by negating the first two world components.

use brachyplan_core::geom::Mat3;
use brachyplan_core::volume::{ScalarVolume, VolumeError, VoxelData, VoxelType};
use brachyplan_core::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum NrrdError {
    #[error("not an NRRD0004 file")]
    BadMagic,
    #[error("unsupported NRRD field `{field}`: {value}")]
    Unsupported { field: String, value: String },
    #[error("header line {line}: {message}")]
    Header { line: usize, message: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
    #[error("payload has {actual} bytes but the header implies {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    Volume(#[from] VolumeError),
}

fn voxel_type(name: &str) -> Option<VoxelType> {
    Some(match name {
        "uchar" | "unsigned char" | "uint8" | "uint8_t" => VoxelType::U8,
        "short" | "short int" | "signed short" | "signed short int" | "int16" | "int16_t" => VoxelType::I16,
        "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => VoxelType::U16,
        "float" => VoxelType::F32,
        _ => return None,
    })
}

fn type_name(t: VoxelType) -> &'static str {
    match t {
        VoxelType::U8 => "uint8",
        VoxelType::I16 => "int16",
        VoxelType::U16 => "uint16",
        VoxelType::F32 => "float",
    }
}

fn parse_vector(s: &str) -> Option<Vec3> {
    let inner = s.trim().strip_prefix('(')?.strip_suffix(')')?;
    let v: Vec<f64> = inner.split(',').map(|c| c.trim().parse().ok()).collect::<Option<_>>()?;
    match v[..] {
        [x, y, z] => Vec3::try_new(x, y, z),
        _ => None,
    }
}

/// Parses an NRRD file with attached raw data.
pub fn read_nrrd(bytes: &[u8]) -> Result<ScalarVolume, NrrdError> {
    let mut pos = 0;
    let mut next_line = || -> Option<&[u8]> {
        if pos >= bytes.len() {
            return None;
        }
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |e| pos + e);
        let line = &bytes[pos..end];
        pos = (end + 1).min(bytes.len() + 1);
        Some(line.strip_suffix(b"\r").unwrap_or(line))
    };
    if next_line() != Some(b"NRRD0004".as_slice()) {
        return Err(NrrdError::BadMagic);
    }

    let mut kind = None;
    let mut dimension = None;
    let mut sizes: Option<[usize; 3]> = None;
    let mut directions: Option<[Vec3; 3]> = None;
    let mut origin = None;
    let mut encoding = None;
    let mut lps = false;
    let mut line_no = 1;
    loop {
        line_no += 1;
        let line = next_line().ok_or(NrrdError::Header { line: line_no, message: "missing blank line before data".into() })?;
        if line.is_empty() {
            break;
        }
        let line = std::str::from_utf8(line)
            .map_err(|_| NrrdError::Header { line: line_no, message: "invalid UTF-8".into() })?;
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let bad = |message: String| NrrdError::Header { line: line_no, message };
        let (field, value) = line.split_once(": ").ok_or_else(|| bad(format!("malformed line `{line}`")))?;
        let value = value.trim();
        let unsupported = || NrrdError::Unsupported { field: field.to_string(), value: value.to_string() };
        match field {
            "type" => kind = Some(voxel_type(value).ok_or_else(unsupported)?),
            "dimension" => {
                if value != "3" {
                    return Err(unsupported());
                }
                dimension = Some(3);
            }
            "space" => match value {
                "right-anterior-superior" | "RAS" => lps = false,
                "left-posterior-superior" | "LPS" => lps = true,
                _ => return Err(unsupported()),
            },
            "space dimension" => {
                if value != "3" {
                    return Err(unsupported());
                }
            }
            "sizes" => {
                let v: Vec<usize> = value
                    .split_whitespace()
                    .map(|s| s.parse().ok())
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad(format!("invalid sizes `{value}`")))?;
                sizes = Some(v.try_into().map_err(|_| bad(format!("expected 3 sizes, got `{value}`")))?);
            }
            "space directions" => {
                let parts: Vec<&str> = value.split(')').map(str::trim).filter(|s| !s.is_empty()).collect();
                let v: Vec<Vec3> = parts
                    .iter()
                    .map(|p| parse_vector(&format!("{p})")))
                    .collect::<Option<_>>()
                    .ok_or_else(|| bad(format!("invalid space directions `{value}`")))?;
                directions = Some(v.try_into().map_err(|_| bad("expected 3 space direction vectors".into()))?);
            }
            "space origin" => origin = Some(parse_vector(value).ok_or_else(|| bad(format!("invalid space origin `{value}`")))?),
            "encoding" => {
                if value != "raw" {
                    return Err(unsupported());
                }
                encoding = Some(());
            }
            "endian" => {
                if value != "little" {
                    return Err(unsupported());
                }
            }
            "kinds" | "space units" | "content" | "labels" | "units" | "measurement frame" => {}
            _ => return Err(unsupported()),
        }
    }
    let kind = kind.ok_or(NrrdError::Missing("type"))?;
    dimension.ok_or(NrrdError::Missing("dimension"))?;
    let dims = sizes.ok_or(NrrdError::Missing("sizes"))?;
    let dirs = directions.ok_or(NrrdError::Missing("space directions"))?;
    let mut origin = origin.ok_or(NrrdError::Missing("space origin"))?;
    encoding.ok_or(NrrdError::Missing("encoding"))?;

    let flip = |v: Vec3| if lps { Vec3::new(-v.x, -v.y, v.z) } else { v };
    origin = flip(origin);
    let spacing = Vec3::new(dirs[0].norm(), dirs[1].norm(), dirs[2].norm());
    let unit = |v: Vec3, s: f64| if s > 0.0 { flip(v) / s } else { v };
    let directions = Mat3::from_cols(unit(dirs[0], spacing.x), unit(dirs[1], spacing.y), unit(dirs[2], spacing.z));

    let payload = &bytes[pos.min(bytes.len())..];
    let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).unwrap_or(usize::MAX);
    let expected = count.saturating_mul(kind.size());
    if payload.len() != expected {
        return Err(NrrdError::SizeMismatch { expected, actual: payload.len() });
    }
    let data = match kind {
        VoxelType::U8 => VoxelData::U8(payload.to_vec()),
        VoxelType::I16 => VoxelData::I16(payload.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect()),
        VoxelType::U16 => VoxelData::U16(payload.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect()),
        VoxelType::F32 => VoxelData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect()),
    };
    Ok(ScalarVolume::new(dims, spacing, origin, directions, data)?)
}

/// Canonical NRRD encoding of `vol` (RAS space, raw little-endian).
pub fn write_nrrd(vol: &ScalarVolume) -> Vec<u8> {
    let d = vol.dims();
    let s = vol.spacing();
    let m = vol.directions();
    let o = vol.origin();
    let cols = [m.col(0) * s.x, m.col(1) * s.y, m.col(2) * s.z];
    let mut out = format!(
        "NRRD0004\ntype: {}\ndimension: 3\nspace: right-anterior-superior\nsizes: {} {} {}\n\
         space directions: ({},{},{}) ({},{},{}) ({},{},{})\nkinds: domain domain domain\n\
         endian: little\nencoding: raw\nspace origin: ({},{},{})\n\n",
        type_name(vol.data().voxel_type()),
        d[0], d[1], d[2],
        cols[0].x, cols[0].y, cols[0].z,
        cols[1].x, cols[1].y, cols[1].z,
        cols[2].x, cols[2].y, cols[2].z,
        o.x, o.y, o.z,
    )
    .into_bytes();
    match vol.data() {
        VoxelData::U8(v) => out.extend_from_slice(v),
        VoxelData::I16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        VoxelData::U16(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        VoxelData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(sizes: &str) -> String {
        format!(
            "NRRD0004\ntype: uint8\ndimension: 3\nsizes: {sizes}\nspace directions: (1,0,0) (0,1,0) (0,0,1)\n\
             encoding: raw\nspace origin: (10,20,30)\n\n"
        )
    }

    #[test]
    fn size_mismatch_is_a_parse_error() {
        let mut bytes = header("4 4 4").into_bytes();
        bytes.extend(std::iter::repeat(7u8).take(63));
        assert!(matches!(read_nrrd(&bytes), Err(NrrdError::SizeMismatch { expected: 64, actual: 63 })));
    }

    #[test]
    fn origin_maps_first_voxel() {
        let mut bytes = header("2 2 2").into_bytes();
        bytes.extend(0..8u8);
        let vol = read_nrrd(&bytes).unwrap();
        assert_eq!(vol.voxel_center(0, 0, 0), Vec3::new(10.0, 20.0, 30.0));
        assert_eq!(vol.value(1, 1, 1), 7.0);
    }

    #[test]
    fn unsupported_encoding_names_field() {
        let bytes = header("2 2 2").replace("encoding: raw", "encoding: gzip").into_bytes();
        match read_nrrd(&bytes) {
            Err(NrrdError::Unsupported { field, .. }) => assert_eq!(field, "encoding"),
            other => panic!("{other:?}"),
        }
        let bytes = header("2 2 2").replace("dimension: 3\n", "dimension: 3\ndata file: x.raw\n").into_bytes();
        assert!(matches!(read_nrrd(&bytes), Err(NrrdError::Unsupported { field, .. }) if field == "data file"));
    }

    #[test]
    fn lps_header_is_converted() {
        let text = header("1 1 1").replace("dimension: 3\n", "dimension: 3\nspace: left-posterior-superior\n");
        let mut bytes = text.into_bytes();
        bytes.push(1);
        let vol = read_nrrd(&bytes).unwrap();
        assert_eq!(vol.voxel_center(0, 0, 0), Vec3::new(-10.0, -20.0, 30.0));
    }
}
