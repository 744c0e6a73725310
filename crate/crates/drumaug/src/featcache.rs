//! Feature cache files (`.mcms`).
//!
//! All fields little-endian:
//!
//! | offset | type    | field                          |
//! |--------|---------|--------------------------------|
//! | 0      | [u8; 4] | magic `MCMS`                   |
//! | 4      | u32     | version (1)                    |
//! | 8      | u32     | channels (3)                   |
//! | 12     | u32     | bands (80 by default)          |
//! | 16     | u32     | frames T                       |
//! | 20     | f32     | hop in milliseconds            |
//! | 24     | f32 ... | values, channel-major `[c][t][b]` |
//!
//! The tensor id is not stored; readers take it from the file name.

use std::path::Path;

use drumaug_core::features::{McmsTensor, N_CHANNELS};

use crate::audio::file_id;
use crate::error::{read, write_atomic, Error, Result};

pub const MAGIC: [u8; 4] = *b"MCMS";
pub const VERSION: u32 = 1;
const HEADER: usize = 24;

pub fn encode_features(t: &McmsTensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER + 4 * t.as_slice().len());
    out.extend_from_slice(&MAGIC);
    for v in [VERSION, N_CHANNELS as u32, t.n_bands() as u32, t.n_frames() as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&((t.hop_seconds() * 1000.0) as f32).to_le_bytes());
    for v in t.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses a feature file; `path` labels errors.
pub fn decode_features(bytes: &[u8], id: &str, path: &Path) -> Result<McmsTensor> {
    let bad = |m: &str| Error::format(path, m);
    if bytes.len() < HEADER || bytes[..4] != MAGIC {
        return Err(bad("not a feature cache file"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    if word(1) != VERSION {
        return Err(bad(&format!("unsupported feature cache version {}", word(1))));
    }
    if word(2) as usize != N_CHANNELS {
        return Err(bad(&format!("expected {N_CHANNELS} channels, found {}", word(2))));
    }
    let (bands, frames) = (word(3) as usize, word(4) as usize);
    let hop_ms = f32::from_le_bytes(bytes[20..24].try_into().unwrap());
    let n = N_CHANNELS * bands * frames;
    if bytes.len() != HEADER + 4 * n {
        return Err(bad(&format!("expected {} bytes, found {}", HEADER + 4 * n, bytes.len())));
    }
    let data = bytes[HEADER..].chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
    // hop_ms holds e.g. 10.0 exactly; recover the seconds the tensor was built with
    let hop = (hop_ms as f64 * 1e6).round() / 1e9;
    Ok(McmsTensor::from_raw(data, frames, bands, hop, id)?)
}

pub fn write_features(path: &Path, t: &McmsTensor) -> Result<()> {
    write_atomic(path, &encode_features(t))
}

pub fn read_features(path: &Path) -> Result<McmsTensor> {
    decode_features(&read(path)?, &file_id(path), path)
}
