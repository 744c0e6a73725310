use super::vocoder::stretch_to_length;
use super::AugmentationSpec;
use crate::analysis::{analysis_config, default_envelope_order, estimate_envelope};
use crate::error::Result;
use crate::signal::{cents_to_ratio, istft, resample, stft, AudioClip};

/// Largest boost or cut applied by envelope transposition, in dB.
pub const MAX_ENVELOPE_GAIN_DB: f64 = 20.0;

/// Transposes by `cents` through resampling, then optionally restores the
/// original duration with the transient-preserving phase vocoder, then
/// shifts the spectral envelope by `envelope_cents` with the pitch held.
///
/// Without compensation every duration (and annotation time) scales by
/// `2^(-cents/1200)`; with it the output has exactly the input length.
pub fn transpose(clip: &AudioClip, cents: f64, envelope_cents: f64, compensate: bool) -> Result<AudioClip> {
    AugmentationSpec::Transpose { cents, envelope_cents, compensate }.validate()?;
    let mut out = resample(clip, cents_to_ratio(-cents))?;
    if compensate {
        out = stretch_to_length(&out, clip.len())?;
    }
    if envelope_cents != 0.0 {
        out = shift_envelope(&out, envelope_cents)?;
    }
    Ok(out)
}

/// Moves the spectral envelope up by `cents` on the frequency axis, leaving
/// the fine structure (and thus the pitch) in place.
///
/// Each frame is filtered with the zero-phase gain `E(f / r) - E(f)` (dB),
/// where `E` is the frame's true envelope and `r = 2^(cents/1200)`, clipped
/// to +/-20 dB.
pub fn shift_envelope(clip: &AudioClip, cents: f64) -> Result<AudioClip> {
    if clip.is_empty() || cents == 0.0 {
        return Ok(clip.clone());
    }
    let sr = clip.sample_rate();
    let mut spec = stft(clip, &analysis_config(sr))?;
    let order = default_envelope_order(sr).min(spec.n_bins() / 2 - 1).max(1);
    let env = estimate_envelope(&spec, order)?;
    let ratio = cents_to_ratio(cents);
    spec.map_frames(|t, frame| {
        let e = env.frame(t);
        for (k, c) in frame.iter_mut().enumerate() {
            let gain_db = (env.at(t, k as f64 / ratio) - e[k]).clamp(-MAX_ENVELOPE_GAIN_DB, MAX_ENVELOPE_GAIN_DB);
            *c *= libm::pow(10.0, gain_db / 20.0);
        }
    });
    istft(&spec)
}
