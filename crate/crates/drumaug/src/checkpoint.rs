//! Detector checkpoints and training logs.
//!
//! Checkpoint layout, little-endian:
//!
//! ```text
//! magic      [u8; 4]  "DACK"
//! version    u32      1
//! meta_len   u32      length of the metadata block
//! meta       UTF-8    "key<TAB>value\n" lines, sorted by key; `topology` holds JSON
//! n_tensors  u32
//! per tensor: name_len u16, name, ndim u8, dims u32 x ndim
//! values     f32      every tensor in table order, row-major
//! ```
//!
//! Parameters are stored as `f32`. [`quantize`] rounds a parameter set the
//! same way, so a saved and reloaded model predicts exactly like the
//! quantized one it came from.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::path::Path;

use drumaug_core::eval::Instrument;
use drumaug_core::model::{ModelParams, Topology, TrainingLog};

use crate::error::{read, write_atomic, Error, Result};

pub const MAGIC: [u8; 4] = *b"DACK";
pub const VERSION: u32 = 1;

/// Parameters with free-form metadata (instrument, threshold, job identity).
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub meta: BTreeMap<String, String>,
}

impl Checkpoint {
    pub fn instrument(&self) -> Option<Instrument> {
        self.meta.get("instrument")?.parse().ok()
    }

    /// Peak-picking threshold chosen on validation data.
    pub fn threshold(&self) -> Option<f64> {
        self.meta.get("threshold")?.parse().ok()
    }
}

/// Rounds every parameter to the nearest `f32`.
pub fn quantize(params: &ModelParams) -> ModelParams {
    let values = params.values().iter().map(|&v| v as f32 as f64).collect();
    ModelParams::from_values(*params.topology(), params.seed(), values).expect("same topology and length")
}

pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let mut meta = ck.meta.clone();
    meta.insert("topology".into(), serde_json::to_string(ck.params.topology()).expect("topology serializes"));
    meta.insert("seed".into(), ck.params.seed().to_string());
    let mut text = String::new();
    for (k, v) in &meta {
        let _ = writeln!(text, "{k}\t{v}");
    }
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    let shapes = ck.params.tensor_shapes();
    out.extend_from_slice(&(shapes.len() as u32).to_le_bytes());
    for (name, dims) in drumaug_core::model::TENSOR_NAMES.iter().zip(&shapes) {
        out.extend_from_slice(&(name.len() as u16).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(dims.len() as u8);
        for &d in dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    for &v in ck.params.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or("truncated checkpoint")?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<Checkpoint, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err("not a checkpoint file".into());
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(format!("unsupported checkpoint version {version}"));
    }
    let meta_len = c.u32()? as usize;
    let text = std::str::from_utf8(c.take(meta_len)?).map_err(|_| "metadata is not UTF-8")?;
    let mut meta: BTreeMap<String, String> = text
        .lines()
        .map(|l| l.split_once('\t').map(|(k, v)| (k.to_string(), v.to_string())).ok_or("malformed metadata line"))
        .collect::<std::result::Result<_, _>>()?;
    let topology: Topology = serde_json::from_str(&meta.remove("topology").ok_or("no topology in metadata")?)
        .map_err(|e| format!("bad topology: {e}"))?;
    let seed: u64 = meta.remove("seed").ok_or("no seed in metadata")?.parse().map_err(|_| "bad seed")?;
    let expected = drumaug_core::model::tensor_shapes(&topology).map_err(|e| e.to_string())?;
    let n = c.u32()? as usize;
    if n != expected.len() {
        return Err(format!("expected {} tensors, found {n}", expected.len()));
    }
    let mut total = 0;
    for (i, want) in expected.iter().enumerate() {
        let len = u16::from_le_bytes(c.take(2)?.try_into().unwrap()) as usize;
        let name = std::str::from_utf8(c.take(len)?).map_err(|_| "tensor name is not UTF-8")?;
        let ndim = c.take(1)?[0] as usize;
        let dims = (0..ndim).map(|_| c.u32().map(|d| d as usize)).collect::<std::result::Result<Vec<_>, _>>()?;
        if name != drumaug_core::model::TENSOR_NAMES[i] || &dims != want {
            return Err(format!(
                "tensor {i}: found {name} {dims:?}, topology expects {} {want:?}",
                drumaug_core::model::TENSOR_NAMES[i]
            ));
        }
        total += dims.iter().product::<usize>();
    }
    let raw = c.take(4 * total)?;
    if c.pos != bytes.len() {
        return Err("trailing bytes after parameters".into());
    }
    let values = raw.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64).collect();
    let params = ModelParams::from_values(topology, seed, values).map_err(|e| e.to_string())?;
    Ok(Checkpoint { params, meta })
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
    decode(bytes).map_err(|m| Error::format(path, m))
}

pub fn save_checkpoint(path: &Path, ck: &Checkpoint) -> Result<()> {
    write_atomic(path, &encode_checkpoint(ck))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    decode_checkpoint(&read(path)?, path)
}

/// Training log text: a header, then one `epoch<TAB>instrument<TAB>train_loss<TAB>validation_f`
/// line per epoch, then the kept epoch.
pub fn format_training_log(instrument: Instrument, log: &TrainingLog) -> String {
    let mut out = String::from("# epoch\tinstrument\ttrain_loss\tvalidation_f\n");
    for e in &log.epochs {
        let _ = writeln!(out, "{}\t{instrument}\t{}\t{}", e.epoch, e.train_loss, e.validation_f);
    }
    let _ = writeln!(out, "# best_epoch\t{}", log.best_epoch);
    let _ = writeln!(out, "# best_validation_f\t{}", log.best_validation_f);
    out
}
