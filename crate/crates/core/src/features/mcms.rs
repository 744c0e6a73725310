use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::MelFilterbank;
use crate::error::{Error, Result};
use crate::signal::{resample, stft, AudioClip, StftConfig};

/// Lowest sample rate accepted by [`compute_mcms`].
pub const MIN_SAMPLE_RATE: u32 = 32_000;

/// Settings of the multi-channel mel spectrogram frontend.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct McmsConfig {
    /// Rate every clip is resampled to before analysis.
    pub sample_rate: u32,
    pub hop_seconds: f64,
    pub window_seconds: [f64; 3],
    pub n_mels: usize,
    pub f_lo: f64,
    pub f_hi: f64,
    /// Added to the mel magnitudes before the logarithm.
    pub log_floor: f64,
    /// Standardize each channel of each clip to zero mean and unit variance.
    pub normalize: bool,
}

impl Default for McmsConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44_100,
            hop_seconds: 0.010,
            window_seconds: [0.023, 0.046, 0.093],
            n_mels: 80,
            f_lo: 27.5,
            f_hi: 16_000.0,
            log_floor: 1e-7,
            normalize: false,
        }
    }
}

impl McmsConfig {
    /// STFT settings of channel `c` at the canonical rate.
    pub fn stft_config(&self, c: usize) -> StftConfig {
        let sr = self.sample_rate;
        let win = libm::round(self.window_seconds[c] * sr as f64) as usize;
        let hop = libm::round(self.hop_seconds * sr as f64) as usize;
        StftConfig::from_samples(win, hop, sr).with_fft_size(win.max(2).next_power_of_two())
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::SampleRateTooLow { got: self.sample_rate, min: MIN_SAMPLE_RATE });
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return Err(Error::InvalidFeatureConfig(format!("log_floor must be positive, got {}", self.log_floor)));
        }
        for c in 0..3 {
            self.stft_config(c).validate(self.sample_rate)?;
        }
        MelFilterbank::new(self.n_mels, self.f_lo, self.f_hi, 2, self.sample_rate).map(|_| ())
    }
}

/// Three log-mel spectrograms sharing one frame grid.
///
/// Stored as `f32`, channel-major: value `(c, t, b)` sits at
/// `(c * n_frames + t) * n_bands + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct McmsTensor {
    data: Vec<f32>,
    n_frames: usize,
    n_bands: usize,
    hop_seconds: f64,
    id: String,
}

pub const N_CHANNELS: usize = 3;

impl McmsTensor {
    pub fn from_raw(
        data: Vec<f32>,
        n_frames: usize,
        n_bands: usize,
        hop_seconds: f64,
        id: impl Into<String>,
    ) -> Result<Self> {
        if data.len() != N_CHANNELS * n_frames * n_bands {
            return Err(Error::ShapeMismatch {
                expected: format!("{N_CHANNELS} x {n_frames} x {n_bands}"),
                got: format!("{} values", data.len()),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFeatureConfig("non-finite feature value".into()));
        }
        if !(hop_seconds > 0.0) {
            return Err(Error::InvalidFeatureConfig(format!("hop must be positive, got {hop_seconds}")));
        }
        Ok(Self { data, n_frames, n_bands, hop_seconds, id: id.into() })
    }

    pub fn n_channels(&self) -> usize {
        N_CHANNELS
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop_seconds
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, c: usize, t: usize, b: usize) -> f32 {
        self.data[(c * self.n_frames + t) * self.n_bands + b]
    }

    /// Bands of channel `c` at frame `t`.
    pub fn frame(&self, c: usize, t: usize) -> &[f32] {
        let i = (c * self.n_frames + t) * self.n_bands;
        &self.data[i..i + self.n_bands]
    }

    /// `n_frames x n_bands` block of channel `c`.
    pub fn channel(&self, c: usize) -> &[f32] {
        let n = self.n_frames * self.n_bands;
        &self.data[c * n..(c + 1) * n]
    }
}

/// Computes the 3-channel log-mel tensor of a clip.
///
/// Clips not at `cfg.sample_rate` are resampled to it first. Channel `c` is
/// `ln(mel * |STFT_c| + log_floor)` with the Hann-windowed STFT of window
/// `cfg.window_seconds[c]`; all channels use the same hop and center padding,
/// giving `ceil(len / hop)` frames each.
pub fn compute_mcms(clip: &AudioClip, cfg: &McmsConfig) -> Result<McmsTensor> {
    cfg.validate()?;
    if clip.sample_rate() < MIN_SAMPLE_RATE {
        return Err(Error::SampleRateTooLow { got: clip.sample_rate(), min: MIN_SAMPLE_RATE });
    }
    if clip.is_empty() {
        return Err(Error::InvalidClip("cannot compute features of an empty clip".into()));
    }
    let resampled;
    let clip = if clip.sample_rate() == cfg.sample_rate {
        clip
    } else {
        let r = cfg.sample_rate as f64 / clip.sample_rate() as f64;
        // resample keeps the nominal rate; relabel to the rate the samples now have
        resampled = AudioClip::new(resample(clip, r)?.into_samples(), cfg.sample_rate, clip.id())?;
        &resampled
    };
    let sr = cfg.sample_rate;
    let nb = cfg.n_mels;
    let mut data: Vec<f32> = Vec::new();
    let mut n_frames = 0;
    let mut mags = Vec::new();
    let mut mel = vec![0.0; nb];
    for c in 0..N_CHANNELS {
        let scfg = cfg.stft_config(c);
        let spec = stft(clip, &scfg)?;
        let bank = MelFilterbank::new(nb, cfg.f_lo, cfg.f_hi, scfg.fft_samples(sr), sr)?;
        n_frames = spec.n_frames();
        data.reserve(N_CHANNELS * n_frames * nb);
        for frame in spec.frames() {
            mags.clear();
            mags.extend(frame.iter().map(|z| z.norm()));
            bank.apply(&mags, &mut mel);
            data.extend(mel.iter().map(|&m| libm::log(m + cfg.log_floor) as f32));
        }
    }
    if cfg.normalize {
        for ch in data.chunks_mut(n_frames * nb) {
            let n = ch.len() as f64;
            let mean = ch.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = ch.iter().map(|&v| (v as f64 - mean) * (v as f64 - mean)).sum::<f64>() / n;
            let inv = if var > 0.0 { 1.0 / libm::sqrt(var) } else { 1.0 };
            for v in ch.iter_mut() {
                *v = ((*v as f64 - mean) * inv) as f32;
            }
        }
    }
    McmsTensor::from_raw(data, n_frames, nb, cfg.hop_seconds, clip.id())
}
