use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use super::{AudioClip, WindowKind};
use crate::error::{Error, Result};
use crate::fft::RealFft;

/// Short-time Fourier transform settings.
///
/// Window and hop are given in seconds and converted to samples at the rate of
/// the clip being analyzed (rounded to the nearest sample). The FFT size
/// defaults to the next power of two at or above the window length.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StftConfig {
    pub window_size: f64,
    pub hop_size: f64,
    pub window_kind: WindowKind,
    pub fft_size: Option<usize>,
}

impl StftConfig {
    pub fn new(window_size: f64, hop_size: f64) -> Self {
        Self { window_size, hop_size, window_kind: WindowKind::Hann, fft_size: None }
    }

    /// Config whose window and hop land exactly on the given sample counts at `sample_rate`.
    pub fn from_samples(window: usize, hop: usize, sample_rate: u32) -> Self {
        let sr = sample_rate as f64;
        Self::new(window as f64 / sr, hop as f64 / sr)
    }

    pub fn with_fft_size(mut self, fft_size: usize) -> Self {
        self.fft_size = Some(fft_size);
        self
    }

    pub fn window_samples(&self, sample_rate: u32) -> usize {
        libm::round(self.window_size * sample_rate as f64) as usize
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        libm::round(self.hop_size * sample_rate as f64) as usize
    }

    pub fn fft_samples(&self, sample_rate: u32) -> usize {
        self.fft_size.unwrap_or_else(|| self.window_samples(sample_rate).max(2).next_power_of_two())
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidStftConfig(msg));
        if !(self.window_size.is_finite() && self.hop_size.is_finite()) {
            return bad("window and hop must be finite".into());
        }
        let win = self.window_samples(sample_rate);
        let hop = self.hop_samples(sample_rate);
        if win < 2 || hop < 1 {
            return bad(format!("window {win} / hop {hop} samples too small at {sample_rate} Hz"));
        }
        if hop > win {
            return bad(format!("hop ({hop}) longer than window ({win})"));
        }
        let fft = self.fft_samples(sample_rate);
        if !fft.is_power_of_two() || fft < win {
            return bad(format!("FFT size {fft} must be a power of two >= window ({win})"));
        }
        Ok(())
    }
}

/// Complex STFT frames (row-major `T x K`) plus what is needed to invert them.
///
/// Frame `t` is centered on sample `t * hop`; the signal is zero-padded by half
/// a window on both sides. Within a frame, window index `n` corresponds to
/// sample `t * hop - window / 2 + n` and is placed at FFT buffer index `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFrameSequence {
    frames: Vec<Complex64>,
    n_frames: usize,
    n_bins: usize,
    config: StftConfig,
    sample_rate: u32,
    window_len: usize,
    hop: usize,
    fft_size: usize,
    source_len: usize,
    id: String,
}

impl SpectralFrameSequence {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    /// Length in samples of the signal the frames were computed from.
    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.frames[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        &mut self.frames[t * self.n_bins..(t + 1) * self.n_bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[Complex64]> {
        self.frames.chunks_exact(self.n_bins)
    }

    /// Center frequency of bin `k` in Hz.
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate as f64 / self.fft_size as f64
    }

    /// Number of frames whose window lies entirely inside the source signal.
    pub fn interior_frames(&self) -> core::ops::Range<usize> {
        let half = self.window_len / 2;
        let first = half.div_ceil(self.hop);
        let last = if self.source_len >= self.window_len - half {
            (self.source_len - (self.window_len - half)) / self.hop + 1
        } else {
            0
        };
        first..last.max(first).min(self.n_frames)
    }

    /// Recovers the windowed time segment of frame `t` (length `window_len`).
    pub fn windowed_segment(&self, t: usize, fft: &RealFft, buf: &mut [f64]) {
        debug_assert_eq!(fft.len(), self.fft_size);
        fft.inverse(self.frame(t), buf);
    }

    /// Applies `f` to every frame in place, passing the frame index.
    pub fn map_frames(&mut self, mut f: impl FnMut(usize, &mut [Complex64])) {
        for (t, frame) in self.frames.chunks_exact_mut(self.n_bins).enumerate() {
            f(t, frame);
        }
    }

    pub fn scale(&mut self, gain: f64) {
        for v in &mut self.frames {
            *v *= gain;
        }
    }
}

/// Number of frames produced for a signal of `len` samples at `hop`.
pub(crate) fn frame_count(len: usize, hop: usize) -> usize {
    len.div_ceil(hop).max(1)
}

/// Windowed, center-padded STFT.
pub fn stft(clip: &AudioClip, cfg: &StftConfig) -> Result<SpectralFrameSequence> {
    let sr = clip.sample_rate();
    cfg.validate(sr)?;
    if clip.is_empty() {
        return Err(Error::InvalidClip("cannot analyze an empty clip".into()));
    }
    let win = cfg.window_samples(sr);
    let hop = cfg.hop_samples(sr);
    let fft_size = cfg.fft_samples(sr);
    let window = cfg.window_kind.build(win);
    let x = clip.samples();
    let n = x.len();
    let n_frames = frame_count(n, hop);
    let n_bins = fft_size / 2 + 1;
    let fft = RealFft::new(fft_size);

    let mut frames = vec![Complex64::new(0.0, 0.0); n_frames * n_bins];
    let mut buf = vec![0.0; fft_size];
    let half = (win / 2) as isize;
    for t in 0..n_frames {
        let start = (t * hop) as isize - half;
        for (i, b) in buf[..win].iter_mut().enumerate() {
            let s = start + i as isize;
            *b = if s >= 0 && (s as usize) < n { x[s as usize] * window[i] } else { 0.0 };
        }
        fft.forward(&buf, &mut frames[t * n_bins..(t + 1) * n_bins]);
    }
    Ok(SpectralFrameSequence {
        frames,
        n_frames,
        n_bins,
        config: *cfg,
        sample_rate: sr,
        window_len: win,
        hop,
        fft_size,
        source_len: n,
        id: String::from(clip.id()),
    })
}

/// Weighted overlap-add resynthesis.
///
/// Each inverse-transformed frame is multiplied by the synthesis window and
/// accumulated; the sum is divided by the accumulated squared window. This is
/// exact for unmodified frames and the least-squares signal estimate for
/// modified ones. Fails when some output sample has (near) zero squared-window
/// coverage.
pub fn istft(frames: &SpectralFrameSequence) -> Result<AudioClip> {
    let win = frames.window_len;
    let hop = frames.hop;
    let n = frames.source_len;
    let window = frames.config.window_kind.build(win);
    let fft = RealFft::new(frames.fft_size);
    let mut out = vec![0.0; n];
    let mut norm = vec![0.0; n];
    let mut buf = vec![0.0; frames.fft_size];
    let half = (win / 2) as isize;
    for t in 0..frames.n_frames {
        fft.inverse(frames.frame(t), &mut buf);
        let start = (t * hop) as isize - half;
        for i in 0..win {
            let s = start + i as isize;
            if s >= 0 && (s as usize) < n {
                let s = s as usize;
                out[s] += buf[i] * window[i];
                norm[s] += window[i] * window[i];
            }
        }
    }
    let max = norm.iter().cloned().fold(0.0, f64::max);
    let min = norm.iter().cloned().fold(f64::INFINITY, f64::min);
    if n > 0 && !(max > 0.0 && min / max > 1e-3) {
        return Err(Error::OverlapAdd { ratio: if max > 0.0 { min / max } else { 0.0 } });
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        *o /= w;
    }
    AudioClip::new(out, frames.sample_rate, frames.id.clone())
}
