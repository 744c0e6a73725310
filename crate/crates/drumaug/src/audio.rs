//! WAV input and output.
//!
//! Reads PCM 16- and 24-bit integer and 32-bit float files; integer samples
//! are scaled by `2^-(bits-1)` and channels are averaged to mono. Writes mono
//! 32-bit float.

use std::io::Cursor;
use std::path::Path;

use drumaug_core::AudioClip;

use crate::error::{read, write_atomic, Error, Result};

/// Identity of a file: its name without extension.
pub fn file_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Loads a WAV file as a mono clip named after the file.
pub fn load_audio(path: &Path) -> Result<AudioClip> {
    decode_wav(&read(path)?, &file_id(path), path)
}

/// Decodes WAV bytes; `path` only labels errors.
pub fn decode_wav(bytes: &[u8], id: &str, path: &Path) -> Result<AudioClip> {
    let wav = |source: hound::Error| Error::Wav { path: path.to_path_buf(), source };
    let mut reader = hound::WavReader::new(Cursor::new(bytes)).map_err(wav)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::format(path, "no channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1u32 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, hound::Error>>()
                .map_err(wav)?
        }
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, hound::Error>>()
            .map_err(wav)?,
        (fmt, bits) => return Err(Error::format(path, format!("unsupported sample format {fmt:?} {bits}-bit"))),
    };
    let samples = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(channels).map(|f| f.iter().sum::<f64>() / channels as f64).collect()
    };
    Ok(AudioClip::new(samples, spec.sample_rate, id)?)
}

/// Encodes a clip as mono 32-bit float WAV.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut buf = Cursor::new(Vec::new());
    {
        // writing to memory cannot fail
        let mut w = hound::WavWriter::new(&mut buf, spec).expect("in-memory WAV header");
        for &s in clip.samples() {
            w.write_sample(s as f32).expect("in-memory WAV sample");
        }
        w.finalize().expect("in-memory WAV finalize");
    }
    buf.into_inner()
}

pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    write_atomic(path, &encode_wav(clip))
}
