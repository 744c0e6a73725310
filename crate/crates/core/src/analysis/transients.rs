use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::fft::RealFft;
use crate::signal::SpectralFrameSequence;

/// Bins below this level relative to the frame maximum are not "active".
const ACTIVE_FLOOR_DB: f64 = -60.0;
const SILENT_MAGNITUDE: f64 = 1e-12;
/// A bin is transient when its energy center of gravity lies this far (as a
/// fraction of the window length) after the window center.
const COG_THRESHOLD: f64 = 0.25;
/// Fraction of active bins that must be transient for the frame to count.
const MIN_TRANSIENT_FRACTION: f64 = 0.20;

/// One detected attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransientEvent {
    /// Frame index closest to the estimated onset.
    pub onset_frame: usize,
    /// Estimated onset position in samples.
    pub onset_sample: f64,
    /// First and last frame of the group of transient frames that produced it.
    pub first_frame: usize,
    pub last_frame: usize,
}

/// Boolean `T x K` mask of transient bins plus the attacks they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientMap {
    mask: Vec<bool>,
    n_frames: usize,
    n_bins: usize,
    events: Vec<TransientEvent>,
}

impl TransientMap {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn is_transient(&self, t: usize, k: usize) -> bool {
        self.mask[t * self.n_bins + k]
    }

    pub fn frame_mask(&self, t: usize) -> &[bool] {
        &self.mask[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Events sorted by strictly increasing onset frame.
    pub fn events(&self) -> &[TransientEvent] {
        &self.events
    }

    pub fn marked_bins(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Union of the transient bins over the frames of `event`.
    pub fn event_bins(&self, event: &TransientEvent) -> Vec<bool> {
        let mut bins = vec![false; self.n_bins];
        for t in event.first_frame..=event.last_frame {
            for (b, &m) in bins.iter_mut().zip(self.frame_mask(t)) {
                *b |= m;
            }
        }
        bins
    }
}

/// Per-bin energy center of gravity of each frame, in samples relative to the
/// window center (positive = later).
///
/// Uses the time-weighted window relation: the spectrum of `(n - N/2) s[n]`
/// divided by the spectrum of the windowed segment `s[n]`. The segment is
/// recovered exactly by inverting the frame.
pub fn center_of_gravity(
    frames: &SpectralFrameSequence,
    t: usize,
    fft: &RealFft,
    buf: &mut [f64],
    weighted: &mut [Complex64],
) -> Vec<f64> {
    frames.windowed_segment(t, fft, buf);
    let center = (frames.window_len() / 2) as f64;
    for (n, v) in buf.iter_mut().enumerate() {
        *v *= n as f64 - center;
    }
    fft.forward(buf, weighted);
    frames
        .frame(t)
        .iter()
        .zip(weighted.iter())
        .map(|(x, xt)| {
            let p = x.norm_sqr();
            if p > 0.0 {
                (xt * x.conj()).re / p
            } else {
                0.0
            }
        })
        .collect()
}

/// Locates transient time-frequency bins from the energy center of gravity.
///
/// An active bin is transient when its center of gravity lies more than a
/// quarter window after the frame center, i.e. an attack is entering the
/// window. A frame keeps its transient bins only when they make up more than
/// 20% of its active bins. Runs of consecutive transient frames form one
/// event whose onset is the energy-weighted mean of `frame center + COG` over
/// the first frame's transient bins.
pub fn detect_transients(frames: &SpectralFrameSequence) -> TransientMap {
    let n_frames = frames.n_frames();
    let n_bins = frames.n_bins();
    let hop = frames.hop();
    let threshold = COG_THRESHOLD * frames.window_len() as f64;
    let fft = RealFft::new(frames.fft_size());
    let mut buf = vec![0.0; frames.fft_size()];
    let mut weighted = vec![Complex64::new(0.0, 0.0); n_bins];

    let mut mask = vec![false; n_frames * n_bins];
    // energy-weighted onset estimate per transient frame
    let mut onsets: Vec<Option<f64>> = vec![None; n_frames];
    for t in 0..n_frames {
        let frame = frames.frame(t);
        let max = frame.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if max <= SILENT_MAGNITUDE {
            continue;
        }
        let floor = max * libm::pow(10.0, ACTIVE_FLOOR_DB / 20.0);
        let cog = center_of_gravity(frames, t, &fft, &mut buf, &mut weighted);
        let mut active = 0usize;
        let mut hits = 0usize;
        for k in 0..n_bins {
            if frame[k].norm() > floor {
                active += 1;
                if cog[k] > threshold {
                    hits += 1;
                }
            }
        }
        if active == 0 || (hits as f64) <= MIN_TRANSIENT_FRACTION * active as f64 {
            continue;
        }
        let (mut wsum, mut psum) = (0.0, 0.0);
        for k in 0..n_bins {
            if frame[k].norm() > floor && cog[k] > threshold {
                mask[t * n_bins + k] = true;
                let w = frame[k].norm_sqr();
                wsum += w;
                psum += w * cog[k];
            }
        }
        onsets[t] = Some((t * hop) as f64 + psum / wsum);
    }

    let mut events: Vec<TransientEvent> = Vec::new();
    let mut t = 0;
    while t < n_frames {
        if let Some(pos) = onsets[t] {
            let first = t;
            while t + 1 < n_frames && onsets[t + 1].is_some() {
                t += 1;
            }
            let onset_frame = libm::round(pos / hop as f64).max(0.0) as usize;
            let onset_frame = onset_frame.min(n_frames - 1);
            match events.last_mut() {
                Some(prev) if prev.onset_frame >= onset_frame => prev.last_frame = t,
                _ => events.push(TransientEvent { onset_frame, onset_sample: pos, first_frame: first, last_frame: t }),
            }
        }
        t += 1;
    }
    TransientMap { mask, n_frames, n_bins, events }
}
