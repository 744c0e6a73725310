use alloc::vec;

use crate::analysis::{analysis_config, classify_peaks, detect_transients, PeakClass};
use crate::error::{Error, Result};
use crate::signal::{istft, stft, AudioClip};

/// Time after an attack over which the attack gain returns to 1, in seconds.
pub const ATTACK_FADE_SECONDS: f64 = 0.100;

fn check_factor(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidAugmentation(alloc::format!("{name} must be positive, got {v}")))
    }
}

/// Rebalances noise against sinusoids: every bin inside a noise-classified
/// spectral peak is multiplied by `factor`; sinusoidal peaks and bins outside
/// any peak pass through. Output length equals input length.
pub fn remix_noise(clip: &AudioClip, factor: f64) -> Result<AudioClip> {
    check_factor("r_n", factor)?;
    if clip.is_empty() {
        return Ok(clip.clone());
    }
    let mut spec = stft(clip, &analysis_config(clip.sample_rate()))?;
    let peaks = classify_peaks(&spec);
    spec.map_frames(|t, frame| {
        for p in peaks.frame(t).iter().filter(|p| p.class == PeakClass::Noise) {
            for c in &mut frame[p.lo..=p.hi] {
                *c *= factor;
            }
        }
    });
    istft(&spec)
}

/// Strengthens or softens attacks.
///
/// Each detected attack contributes its transient bins. Frames whose window
/// reaches the onset but are centered at or before it get `factor`; later
/// frames get a gain falling linearly from `factor` at the onset to 1 at
/// onset + 100 ms. A later attack overrides an earlier one on shared bins.
/// All other bins are untouched and the output length equals the input length.
pub fn remix_attacks(clip: &AudioClip, factor: f64) -> Result<AudioClip> {
    check_factor("r_a", factor)?;
    if clip.is_empty() {
        return Ok(clip.clone());
    }
    let mut spec = stft(clip, &analysis_config(clip.sample_rate()))?;
    let map = detect_transients(&spec);
    if map.is_empty() || factor == 1.0 {
        return istft(&spec);
    }
    let hop = spec.hop() as f64;
    let half = (spec.window_len() / 2) as f64;
    let fade = ATTACK_FADE_SECONDS * clip.sample_rate() as f64;
    let n_bins = spec.n_bins();
    let mut gains = vec![1.0; spec.n_frames() * n_bins];
    for event in map.events() {
        let bins = map.event_bins(event);
        let onset = event.onset_sample;
        for t in 0..spec.n_frames() {
            let center = t as f64 * hop;
            if center + half < onset || center > onset + fade {
                continue;
            }
            let g = if center <= onset { factor } else { factor + (1.0 - factor) * (center - onset) / fade };
            for (k, _) in bins.iter().enumerate().filter(|(_, &b)| b) {
                gains[t * n_bins + k] = g;
            }
        }
    }
    spec.map_frames(|t, frame| {
        for (c, g) in frame.iter_mut().zip(&gains[t * n_bins..(t + 1) * n_bins]) {
            *c *= *g;
        }
    });
    istft(&spec)
}
