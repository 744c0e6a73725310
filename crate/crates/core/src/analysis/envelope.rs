use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::RealFft;
use crate::signal::SpectralFrameSequence;

/// Level assigned to silent bins and frames, in dB re. full-scale amplitude.
pub const SILENCE_FLOOR_DB: f64 = -120.0;
/// Iteration stops once the envelope is within this many dB of every bin.
const CONVERGENCE_DB: f64 = 0.5;
const MAX_ITERATIONS: usize = 30;
/// Ceiling above the frame's largest log magnitude.
const HEADROOM_DB: f64 = 3.0;

/// Cepstral order used when none is given: one coefficient per 2 kHz of sample rate.
pub fn default_envelope_order(sample_rate: u32) -> usize {
    (sample_rate / 2000).max(1) as usize
}

/// Smooth per-frame log-magnitude curves, in dB re. full-scale amplitude
/// (magnitudes are normalized by the window sum).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEnvelope {
    values: Vec<f64>,
    n_frames: usize,
    n_bins: usize,
    order: usize,
}

impl SpectralEnvelope {
    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.values[t * self.n_bins..(t + 1) * self.n_bins]
    }

    /// Envelope of frame `t` at fractional bin position `pos` (linear
    /// interpolation, clamped at both ends).
    pub fn at(&self, t: usize, pos: f64) -> f64 {
        let f = self.frame(t);
        if pos <= 0.0 {
            return f[0];
        }
        let i = pos as usize;
        if i + 1 >= f.len() {
            return f[f.len() - 1];
        }
        let frac = pos - i as f64;
        f[i] + frac * (f[i + 1] - f[i])
    }
}

/// Log magnitude of each bin in dB, normalized by the window sum and floored.
pub(crate) fn log_magnitude_db(frame: &[Complex64], window_sum: f64, out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(frame) {
        let a = c.norm() / window_sum;
        *o = if a > 0.0 { (20.0 * libm::log10(a)).max(SILENCE_FLOOR_DB) } else { SILENCE_FLOOR_DB };
    }
}

/// Upper spectral envelope by iterative cepstral smoothing ("true envelope").
///
/// Starting from the log spectrum, each pass low-pass lifters the cepstrum
/// to `order` coefficients and raises the working spectrum to the maximum of
/// itself and the smoothed curve, until the curve is no more than 0.5 dB below
/// every bin or 30 passes have run. The result is clamped to
/// `[SILENCE_FLOOR_DB, frame max + 3 dB]`.
pub fn estimate_envelope(frames: &SpectralFrameSequence, order: usize) -> Result<SpectralEnvelope> {
    let n_bins = frames.n_bins();
    if order == 0 || order >= n_bins / 2 {
        return Err(Error::EnvelopeOrder { order, bins: n_bins });
    }
    let fft = RealFft::new(frames.fft_size());
    let window_sum: f64 = frames.config().window_kind.build(frames.window_len()).iter().sum();
    let mut values = vec![0.0; frames.n_frames() * n_bins];
    let mut smoother = CepstralSmoother::new(&fft, order);
    let mut log_mag = vec![0.0; n_bins];
    let mut work = vec![0.0; n_bins];
    let mut smooth = vec![0.0; n_bins];

    for t in 0..frames.n_frames() {
        log_magnitude_db(frames.frame(t), window_sum, &mut log_mag);
        let out = &mut values[t * n_bins..(t + 1) * n_bins];
        let top = log_mag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if top <= SILENCE_FLOOR_DB {
            out.fill(SILENCE_FLOOR_DB);
            continue;
        }
        work.copy_from_slice(&log_mag);
        for _ in 0..MAX_ITERATIONS {
            smoother.smooth(&work, &mut smooth);
            let gap = log_mag.iter().zip(&smooth).map(|(l, s)| l - s).fold(f64::NEG_INFINITY, f64::max);
            if gap < CONVERGENCE_DB {
                break;
            }
            for ((w, l), s) in work.iter_mut().zip(&log_mag).zip(&smooth) {
                *w = l.max(*s);
            }
        }
        for (o, s) in out.iter_mut().zip(&smooth) {
            *o = s.clamp(SILENCE_FLOOR_DB, top + HEADROOM_DB);
        }
    }
    Ok(SpectralEnvelope { values, n_frames: frames.n_frames(), n_bins, order })
}

struct CepstralSmoother<'a> {
    fft: &'a RealFft,
    order: usize,
    spec: Vec<Complex64>,
    cep: Vec<f64>,
}

impl<'a> CepstralSmoother<'a> {
    fn new(fft: &'a RealFft, order: usize) -> Self {
        Self { fft, order, spec: vec![Complex64::new(0.0, 0.0); fft.bins()], cep: vec![0.0; fft.len()] }
    }

    fn smooth(&mut self, input: &[f64], output: &mut [f64]) {
        for (s, &v) in self.spec.iter_mut().zip(input) {
            *s = Complex64::new(v, 0.0);
        }
        self.fft.inverse(&self.spec, &mut self.cep);
        let n = self.cep.len();
        for (q, c) in self.cep.iter_mut().enumerate() {
            if q > self.order && q < n - self.order {
                *c = 0.0;
            }
        }
        self.fft.forward(&self.cep, &mut self.spec);
        for (o, s) in output.iter_mut().zip(&self.spec) {
            *o = s.re;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::analysis_config;
    use crate::signal::{stft, AudioClip};

    #[test]
    fn order_bounds() {
        let clip = AudioClip::new(vec![0.1; 4000], 44100, "x").unwrap();
        let spec = stft(&clip, &analysis_config(44100)).unwrap();
        assert!(matches!(estimate_envelope(&spec, 0), Err(Error::EnvelopeOrder { .. })));
        assert!(matches!(estimate_envelope(&spec, spec.n_bins() / 2), Err(Error::EnvelopeOrder { .. })));
        assert!(estimate_envelope(&spec, default_envelope_order(44100)).is_ok());
    }

    #[test]
    fn silent_frames_sit_on_the_floor() {
        let clip = AudioClip::new(vec![0.0; 8000], 44100, "x").unwrap();
        let spec = stft(&clip, &analysis_config(44100)).unwrap();
        let env = estimate_envelope(&spec, 22).unwrap();
        for t in 0..env.n_frames() {
            assert!(env.frame(t).iter().all(|&v| v == SILENCE_FLOOR_DB));
        }
    }

    #[test]
    fn smoothing_preserves_a_constant() {
        let fft = RealFft::new(64);
        let mut s = CepstralSmoother::new(&fft, 4);
        let mut out = vec![0.0; 33];
        s.smooth(&[-20.0; 33], &mut out);
        assert!(out.iter().all(|v| (v + 20.0).abs() < 1e-9));
    }
}
