//! Audio buffers, short-time Fourier analysis/synthesis and resampling.

mod clip;
mod resample;
mod stft;
mod window;

pub use clip::AudioClip;
pub use resample::{resample, Resampler};
pub use stft::{istft, stft, SpectralFrameSequence, StftConfig};
pub use window::WindowKind;

/// Frequency ratio of an interval given in cents.
pub fn cents_to_ratio(cents: f64) -> f64 {
    libm::exp2(cents / 1200.0)
}

/// Signal-to-noise ratio of `estimate` against `reference`, in dB.
///
/// Returns `f64::INFINITY` for an exact match.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> f64 {
    let n = reference.len().min(estimate.len());
    let mut sig = 0.0;
    let mut err = 0.0;
    for i in 0..n {
        sig += reference[i] * reference[i];
        let d = reference[i] - estimate[i];
        err += d * d;
    }
    for v in reference[n..].iter().chain(&estimate[n..]) {
        err += v * v;
    }
    if err == 0.0 {
        return f64::INFINITY;
    }
    10.0 * libm::log10(sig / err)
}
