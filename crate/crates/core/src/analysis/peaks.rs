use alloc::vec::Vec;
use core::f64::consts::PI;

use super::princarg;
use crate::signal::SpectralFrameSequence;

/// Peaks below this level relative to the frame maximum are ignored.
const PEAK_FLOOR_DB: f64 = -80.0;
/// Frames whose maximum magnitude is below this are treated as silent.
const SILENT_MAGNITUDE: f64 = 1e-12;
/// Maximum magnitude-weighted spread of per-bin instantaneous frequencies
/// (in bins) for a sinusoidal peak.
const MAX_FREQ_SPREAD: f64 = 0.1;
/// Maximum normalized frame-to-frame amplitude change for a sinusoidal peak.
const MAX_AMPLITUDE_MODULATION: f64 = 0.15;
/// Bins on either side of the maximum that enter the descriptors.
const LOBE_HALF_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PeakClass {
    Sinusoid,
    Noise,
}

impl PeakClass {
    pub fn label(self) -> &'static str {
        match self {
            PeakClass::Sinusoid => "sinusoid",
            PeakClass::Noise => "noise",
        }
    }
}

/// One spectral peak: the bins `lo..=hi` around the local maximum at `bin`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    pub lo: usize,
    pub hi: usize,
    pub bin: usize,
    pub class: PeakClass,
    /// Magnitude-weighted standard deviation of instantaneous frequency, in bins.
    pub freq_spread: f64,
    /// Normalized amplitude change against the neighbouring frames.
    pub amplitude_modulation: f64,
}

impl SpectralPeak {
    pub fn contains(&self, k: usize) -> bool {
        (self.lo..=self.hi).contains(&k)
    }
}

/// Classified peaks of every frame; ranges within a frame are disjoint and sorted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakClassification {
    frames: Vec<Vec<SpectralPeak>>,
}

impl PeakClassification {
    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, t: usize) -> &[SpectralPeak] {
        &self.frames[t]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[SpectralPeak]> {
        self.frames.iter().map(Vec::as_slice)
    }

    pub fn total_peaks(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    /// The peak of frame `t` whose range contains bin `k`.
    pub fn peak_at(&self, t: usize, k: usize) -> Option<&SpectralPeak> {
        let peaks = &self.frames[t];
        let idx = peaks.partition_point(|p| p.hi < k);
        peaks.get(idx).filter(|p| p.contains(k))
    }
}

/// Labels every spectral peak as sinusoidal or noise.
///
/// Two descriptors are computed per peak from the bins within two bins of its
/// maximum. Frequency coherence: each bin's instantaneous frequency is
/// derived from the phase advance to the neighbouring frame; a stable partial
/// makes all bins of its main lobe agree. Amplitude stability: the lobe's
/// amplitude is compared with the same bins in the previous and next frames.
/// A peak is sinusoidal when both descriptors stay under fixed thresholds.
///
/// Both descriptors are invariant to a global gain. Frequency resolution is
/// only adequate for windows of 40 ms or more.
pub fn classify_peaks(frames: &SpectralFrameSequence) -> PeakClassification {
    let n_frames = frames.n_frames();
    let k_bins = frames.n_bins();
    let hop = frames.hop() as f64;
    let n_fft = frames.fft_size() as f64;
    let mags: Vec<Vec<f64>> = frames.frames().map(|f| f.iter().map(|c| c.norm()).collect()).collect();
    let phases: Vec<Vec<f64>> = frames.frames().map(|f| f.iter().map(|c| c.arg()).collect()).collect();

    let mut out = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let m = &mags[t];
        let frame_max = m.iter().cloned().fold(0.0, f64::max);
        if frame_max <= SILENT_MAGNITUDE || k_bins < 3 {
            out.push(Vec::new());
            continue;
        }
        let floor = frame_max * libm::pow(10.0, PEAK_FLOOR_DB / 20.0);

        // Phase pair used for instantaneous frequency: (earlier, later, sign).
        let inst_freq = |k: usize| -> f64 {
            if n_frames < 2 {
                return k as f64;
            }
            let (a, b) = if t > 0 { (t - 1, t) } else { (t, t + 1) };
            let expected = 2.0 * PI * k as f64 * hop / n_fft;
            let dev = princarg(phases[b][k] - phases[a][k] - expected);
            k as f64 + dev * n_fft / (2.0 * PI * hop)
        };
        let lobe_amp = |frame: &[f64], lo: usize, hi: usize| -> f64 {
            libm::sqrt(frame[lo..=hi].iter().map(|v| v * v).sum::<f64>())
        };

        let ranges = peak_ranges(m);
        let mut peaks = Vec::with_capacity(ranges.len());
        for (lo, bin, hi) in ranges {
            if m[bin] < floor {
                continue;
            }
            let l0 = bin.saturating_sub(LOBE_HALF_WIDTH).max(lo);
            let l1 = (bin + LOBE_HALF_WIDTH).min(hi);

            let (mut wsum, mut fsum) = (0.0, 0.0);
            let freqs: Vec<(f64, f64)> = (l0..=l1)
                .map(|k| {
                    let w = m[k] * m[k];
                    let f = inst_freq(k);
                    wsum += w;
                    fsum += w * f;
                    (w, f)
                })
                .collect();
            let mean = fsum / wsum;
            let var = freqs.iter().map(|(w, f)| w * (f - mean) * (f - mean)).sum::<f64>() / wsum;
            let freq_spread = libm::sqrt(var);

            let a_t = lobe_amp(m, l0, l1);
            let mut changes = 0.0;
            let mut count = 0.0;
            if t > 0 {
                changes += libm::fabs(a_t - lobe_amp(&mags[t - 1], l0, l1));
                count += 1.0;
            }
            if t + 1 < n_frames {
                changes += libm::fabs(lobe_amp(&mags[t + 1], l0, l1) - a_t);
                count += 1.0;
            }
            let amplitude_modulation = if count > 0.0 { changes / (count * a_t) } else { 0.0 };

            let class = if freq_spread <= MAX_FREQ_SPREAD && amplitude_modulation <= MAX_AMPLITUDE_MODULATION {
                PeakClass::Sinusoid
            } else {
                PeakClass::Noise
            };
            peaks.push(SpectralPeak { lo, hi, bin, class, freq_spread, amplitude_modulation });
        }
        out.push(peaks);
    }
    PeakClassification { frames: out }
}

/// Local maxima of `m` (excluding DC and Nyquist) with disjoint bin ranges.
///
/// Returns `(lo, max_bin, hi)` triples. Neighbouring peaks are split at the
/// minimum between them, which goes to the left peak.
fn peak_ranges(m: &[f64]) -> Vec<(usize, usize, usize)> {
    let k = m.len();
    let maxima: Vec<usize> = (1..k - 1).filter(|&i| m[i] > m[i - 1] && m[i] >= m[i + 1]).collect();
    let mut out = Vec::with_capacity(maxima.len());
    for (idx, &p) in maxima.iter().enumerate() {
        let lo = if idx == 0 {
            let mut lo = p;
            while lo > 0 && m[lo - 1] < m[lo] {
                lo -= 1;
            }
            lo
        } else {
            out.last().map(|&(_, _, hi): &(usize, usize, usize)| hi + 1).unwrap_or(0)
        };
        let hi = if let Some(&next) = maxima.get(idx + 1) {
            (p + 1..next).min_by(|&a, &b| m[a].total_cmp(&m[b])).unwrap_or(p)
        } else {
            let mut hi = p;
            while hi + 1 < k && m[hi + 1] <= m[hi] {
                hi += 1;
            }
            hi
        };
        out.push((lo, p, hi));
    }
    out
}
