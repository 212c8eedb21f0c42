//! Flat binary feature cache.
//!
//! Layout, all little-endian: 8-byte magic `SERFEAT1`, `u32` frame count T,
//! `u32` dimension D, `u32` feature-kind code (0 = LMFB, 1 = MFCC), `f64`
//! frame rate in Hz, then T*D row-major `f32` values.

use std::io::Read;
use std::path::Path;

use crate::tensor::Tensor;

use super::{FeatureError, FeatureKind, FeatureSequence};

const MAGIC: &[u8; 8] = b"SERFEAT1";
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8;

fn cache_err(path: &Path, detail: impl Into<String>) -> FeatureError {
    FeatureError::Cache {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

pub fn write_cache(path: impl AsRef<Path>, seq: &FeatureSequence) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let t = seq.num_frames() as u32;
    let d = seq.dim() as u32;
    let mut buf = Vec::with_capacity(HEADER_LEN + seq.frames.len() * 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&d.to_le_bytes());
    buf.extend_from_slice(&seq.kind.code().to_le_bytes());
    buf.extend_from_slice(&seq.frame_rate_hz.to_le_bytes());
    for &v in seq.frames.data() {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::write(path, buf).map_err(|e| cache_err(path, e.to_string()))
}

/// Header fields without loading the data: (T, D, kind).
pub fn read_cache_header(path: impl AsRef<Path>) -> Result<(u32, u32, FeatureKind), FeatureError> {
    let path = path.as_ref();
    let mut file = std::fs::File::open(path).map_err(|e| cache_err(path, e.to_string()))?;
    let mut header = [0u8; HEADER_LEN];
    file.read_exact(&mut header)
        .map_err(|e| cache_err(path, e.to_string()))?;
    parse_header(path, &header)
}

fn parse_header(path: &Path, header: &[u8; HEADER_LEN]) -> Result<(u32, u32, FeatureKind), FeatureError> {
    if &header[0..8] != MAGIC {
        return Err(cache_err(path, "bad magic; not a feature cache file"));
    }
    let t = u32::from_le_bytes(header[8..12].try_into().unwrap());
    let d = u32::from_le_bytes(header[12..16].try_into().unwrap());
    let code = u32::from_le_bytes(header[16..20].try_into().unwrap());
    let kind = FeatureKind::from_code(code)
        .ok_or_else(|| cache_err(path, format!("unknown feature kind code {code}")))?;
    Ok((t, d, kind))
}

pub fn read_cache(path: impl AsRef<Path>) -> Result<FeatureSequence, FeatureError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| cache_err(path, e.to_string()))?;
    if bytes.len() < HEADER_LEN {
        return Err(cache_err(path, "truncated header"));
    }
    let header: [u8; HEADER_LEN] = bytes[..HEADER_LEN].try_into().unwrap();
    let (t, d, kind) = parse_header(path, &header)?;
    let frame_rate_hz = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let expected = t as usize * d as usize * 4;
    let data = &bytes[HEADER_LEN..];
    if data.len() != expected {
        return Err(cache_err(
            path,
            format!("expected {expected} data bytes, found {}", data.len()),
        ));
    }
    let values: Vec<f64> = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
        .collect();
    let frames = Tensor::matrix(t as usize, d as usize, values)
        .map_err(|e| cache_err(path, e.to_string()))?;
    if !frames.all_finite() {
        return Err(cache_err(path, "non-finite feature values"));
    }
    Ok(FeatureSequence {
        frames,
        frame_rate_hz,
        kind,
    })
}
