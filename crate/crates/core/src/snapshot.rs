use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::grid::GridSpec;

/// FRH1 field snapshot layout, all little-endian:
///
///   bytes  0..4   magic "FRH1"
///   bytes  4..8   format version (u32, currently 1)
///   bytes  8..16  reserved, zero
///   bytes 16..20  grid dimension (u32)
///   bytes 20..24  points per axis (u32)
///   bytes 24..32  half-width L (f64)
///   bytes 32..    n^dim samples, f64 re then f64 im, row-major
///
/// Encoding and decoding are bit-exact inverses.
const MAGIC: [u8; 4] = *b"FRH1";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

pub fn encode_snapshot(field: &FieldState) -> Vec<u8> {
    let grid = field.grid();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * grid.total_points());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&[0u8; 8]);
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_width().to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<FieldState> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SnapshotFormat(format!(
            "file too short for header: {} bytes",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::SnapshotFormat("bad magic, not an FRH1 file".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::SnapshotFormat(format!(
            "unsupported format version {version}"
        )));
    }
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap()) as usize;
    let n = u32::from_le_bytes(bytes[20..24].try_into().unwrap()) as usize;
    let half_width = f64::from_le_bytes(bytes[24..32].try_into().unwrap());
    let grid = GridSpec::new(dim, half_width, n)?;
    let body = &bytes[HEADER_LEN..];
    let expected = 16 * grid.total_points();
    if body.len() != expected {
        return Err(Error::SnapshotFormat(format!(
            "payload has {} bytes, grid needs {expected}",
            body.len()
        )));
    }
    let values: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|chunk| {
            Complex64::new(
                f64::from_le_bytes(chunk[0..8].try_into().unwrap()),
                f64::from_le_bytes(chunk[8..16].try_into().unwrap()),
            )
        })
        .collect();
    FieldState::from_values(grid, values)
}

pub fn write_snapshot(path: impl AsRef<Path>, field: &FieldState) -> Result<()> {
    fs::write(path, encode_snapshot(field))?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<FieldState> {
    decode_snapshot(&fs::read(path)?)
}
