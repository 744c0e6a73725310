//! Decomposition primitives used by the augmentations: sinusoid/noise peak
//! classification, transient bin detection and spectral envelope estimation.

mod envelope;
mod peaks;
mod transients;

pub use envelope::{default_envelope_order, estimate_envelope, SpectralEnvelope, SILENCE_FLOOR_DB};
pub use peaks::{classify_peaks, PeakClass, PeakClassification, SpectralPeak};
pub use transients::{detect_transients, TransientEvent, TransientMap};

use crate::signal::StftConfig;

/// STFT settings the augmentations analyze with: a power-of-two window of at
/// least 40 ms and a quarter-window hop.
pub fn analysis_config(sample_rate: u32) -> StftConfig {
    let win = libm::ceil(0.040 * sample_rate as f64) as usize;
    let win = win.max(16).next_power_of_two();
    StftConfig::from_samples(win, win / 4, sample_rate).with_fft_size(win)
}

/// Wraps a phase to `(-pi, pi]`.
pub(crate) fn princarg(phase: f64) -> f64 {
    use core::f64::consts::PI;
    let p = phase - 2.0 * PI * libm::round(phase / (2.0 * PI));
    if p <= -PI {
        p + 2.0 * PI
    } else {
        p
    }
}
