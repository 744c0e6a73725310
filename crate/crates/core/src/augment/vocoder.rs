//! Phase-vocoder time-scale modification with transient preservation.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::analysis::{analysis_config, detect_transients, princarg};
use crate::error::Result;
use crate::fft::RealFft;
use crate::signal::{stft, AudioClip};

/// Piecewise-linear map from output sample position to input sample position.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeMap {
    // (output position, input position), strictly increasing in both
    points: Vec<(f64, f64)>,
    // output ranges that are copied at unit rate around attacks
    locked: Vec<(f64, f64)>,
}

impl TimeMap {
    /// Map stretching `in_len` samples to `out_len`, passing through each
    /// attack at `onset * out_len / in_len` with unit slope for up to half a
    /// window on either side.
    pub fn new(in_len: usize, out_len: usize, onsets: &[f64], half_window: f64) -> Self {
        let (li, lo) = (in_len as f64, out_len as f64);
        let alpha = lo / li;
        let mut points = vec![(0.0, 0.0)];
        let mut locked = Vec::new();
        let inside: Vec<f64> = onsets.iter().cloned().filter(|&p| p > 0.0 && p < li).collect();
        for (i, &p) in inside.iter().enumerate() {
            let prev = if i == 0 { 0.0 } else { inside[i - 1] };
            let next = inside.get(i + 1).cloned().unwrap_or(li);
            let gap = (p - prev).min(next - p);
            let h = half_window.min(0.25 * gap * alpha.min(1.0));
            if h < 1.0 {
                continue;
            }
            let s = alpha * p;
            points.push((s - h, p - h));
            points.push((s + h, p + h));
            locked.push((s - h, s + h));
        }
        points.push((lo, li));
        Self { points, locked }
    }

    /// Input position for output position `s` (linear extrapolation past the ends).
    pub fn input_position(&self, s: f64) -> f64 {
        let pts = &self.points;
        let i = pts.partition_point(|&(o, _)| o <= s).clamp(1, pts.len() - 1);
        let (s0, a0) = pts[i - 1];
        let (s1, a1) = pts[i];
        a0 + (s - s0) * (a1 - a0) / (s1 - s0)
    }

    /// Output ranges copied at unit rate (one per preserved attack).
    pub fn locked_ranges(&self) -> &[(f64, f64)] {
        &self.locked
    }
}

/// Stretches `clip` to exactly `out_len` samples without changing its pitch.
///
/// Standard phase propagation with identity phase locking: peak bins advance
/// by their instantaneous frequency times the synthesis hop, and the other
/// bins of each peak keep their analysis phase offset to it. Around every
/// detected attack the time map runs at unit rate for up to half a window on
/// each side, and phases are reset to the analysis phases on entering that
/// region, so the attack is reproduced without smearing and lands at its
/// proportionally scaled position. The stretch is absorbed by the stationary
/// parts in between.
pub fn stretch_to_length(clip: &AudioClip, out_len: usize) -> Result<AudioClip> {
    if out_len == clip.len() {
        return Ok(clip.clone());
    }
    if clip.is_empty() || out_len == 0 {
        return clip.with_samples(vec![0.0; out_len]);
    }
    vocode(clip, out_len)
}

fn vocode(clip: &AudioClip, out_len: usize) -> Result<AudioClip> {
    let sr = clip.sample_rate();
    let cfg = analysis_config(sr);
    let n = cfg.window_samples(sr);
    let hop = cfg.hop_samples(sr);
    let half = n / 2;
    let window = cfg.window_kind.build(n);
    let fft = RealFft::new(n);
    let bins = n / 2 + 1;
    let x = clip.samples();

    let spec = stft(clip, &cfg)?;
    let onsets: Vec<f64> = detect_transients(&spec).events().iter().map(|e| e.onset_sample).collect();
    let map = TimeMap::new(clip.len(), out_len, &onsets, half as f64);

    let analyze = |center: isize, out: &mut [Complex64], buf: &mut [f64]| {
        let start = center - half as isize;
        for (i, b) in buf.iter_mut().enumerate() {
            let s = start + i as isize;
            *b = if s >= 0 && (s as usize) < x.len() { x[s as usize] * window[i] } else { 0.0 };
        }
        fft.forward(buf, out);
    };

    let n_frames = out_len.div_ceil(hop).max(1);
    let mut out = vec![0.0; out_len];
    let mut norm = vec![0.0; out_len];
    let mut buf = vec![0.0; n];
    let mut frame = vec![Complex64::new(0.0, 0.0); bins];
    let mut prev_phase = vec![0.0; bins];
    let mut synth_phase = vec![0.0; bins];
    let mut new_phase = vec![0.0; bins];
    let mut mags = vec![0.0; bins];
    let mut prev_center = 0isize;
    let mut next_lock = 0usize;

    for m in 0..n_frames {
        let s = (m * hop) as f64;
        let center = libm::round(map.input_position(s)) as isize;
        analyze(center, &mut frame, &mut buf);
        for k in 0..bins {
            mags[k] = frame[k].norm();
        }
        let phase: Vec<f64> = frame.iter().map(|c| c.arg()).collect();

        let mut reset = m == 0;
        while next_lock < map.locked_ranges().len() && s >= map.locked_ranges()[next_lock].0 {
            reset = true;
            next_lock += 1;
        }
        let ha = center - prev_center;
        if reset || ha <= 0 {
            synth_phase.copy_from_slice(&phase);
        } else {
            let ha = ha as f64;
            let advance = |k: usize| -> f64 {
                let omega = 2.0 * PI * k as f64 / n as f64;
                let dev = princarg(phase[k] - prev_phase[k] - omega * ha);
                (omega + dev / ha) * hop as f64
            };
            for (lo, pk, hi) in lobes(&mags) {
                let p = synth_phase[pk] + advance(pk);
                for k in lo..=hi {
                    new_phase[k] = p + phase[k] - phase[pk];
                }
            }
            core::mem::swap(&mut synth_phase, &mut new_phase);
        }
        prev_phase.copy_from_slice(&phase);
        prev_center = center;

        for k in 0..bins {
            frame[k] = Complex64::from_polar(mags[k], synth_phase[k]);
        }
        fft.inverse(&frame, &mut buf);
        let start = (m * hop) as isize - half as isize;
        for i in 0..n {
            let t = start + i as isize;
            if t >= 0 && (t as usize) < out_len {
                out[t as usize] += buf[i] * window[i];
                norm[t as usize] += window[i] * window[i];
            }
        }
    }
    let max = norm.iter().cloned().fold(0.0, f64::max);
    for (o, w) in out.iter_mut().zip(&norm) {
        *o /= w.max(1e-3 * max);
    }
    clip.with_samples(out)
}

/// Regions of influence of the magnitude peaks, covering all bins: each
/// peak owns the bins up to the minimum that separates it from the next.
/// A spectrum without interior maxima is one region around its largest bin.
fn lobes(mags: &[f64]) -> Vec<(usize, usize, usize)> {
    let k = mags.len();
    let peaks: Vec<usize> = (1..k - 1).filter(|&i| mags[i] > mags[i - 1] && mags[i] >= mags[i + 1]).collect();
    if peaks.is_empty() {
        let top = (0..k).max_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap_or(0);
        return vec![(0, top, k - 1)];
    }
    let mut out = Vec::with_capacity(peaks.len());
    let mut lo = 0;
    for (i, &p) in peaks.iter().enumerate() {
        let hi = match peaks.get(i + 1) {
            Some(&next) => (p + 1..next).min_by(|&a, &b| mags[a].total_cmp(&mags[b])).unwrap_or(p),
            None => k - 1,
        };
        out.push((lo, p, hi));
        lo = hi + 1;
    }
    out
}
