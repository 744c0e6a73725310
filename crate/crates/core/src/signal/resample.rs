use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::AudioClip;
use crate::error::{Error, Result};

/// Stopband attenuation the Kaiser design targets, in dB.
const STOPBAND_DB: f64 = 80.0;
/// Passband edge as a fraction of the limiting Nyquist frequency.
const PASSBAND_EDGE: f64 = 0.90;
/// Stopband edge as a fraction of the limiting Nyquist frequency.
const STOPBAND_EDGE: f64 = 1.0;
/// Kernel table oversampling (table entries per input sample).
const TABLE_STEPS: usize = 4096;

/// Band-limited resampler for a fixed length ratio.
///
/// Output sample `j` is the value of the ideally interpolated input at input
/// position `j / ratio`, low-pass filtered at the Nyquist frequency of the
/// slower of the two rates. The kernel is a Kaiser-windowed sinc whose
/// transition band spans 90%..100% of that Nyquist, designed for 80 dB of
/// stopband attenuation.
#[derive(Debug, Clone)]
pub struct Resampler {
    ratio: f64,
    half_width: f64,
    table: Vec<f64>,
}

impl Resampler {
    pub fn new(ratio: f64) -> Result<Self> {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::InvalidRatio(ratio));
        }
        let limit = ratio.min(1.0);
        // cycles per input sample
        let cutoff = 0.5 * limit * 0.5 * (PASSBAND_EDGE + STOPBAND_EDGE);
        let transition = 0.5 * limit * (STOPBAND_EDGE - PASSBAND_EDGE);
        let beta = 0.1102 * (STOPBAND_DB - 8.7);
        let taps = (STOPBAND_DB - 8.0) / (2.285 * 2.0 * PI * transition);
        let half_width = libm::ceil(taps / 2.0);
        let len = (half_width as usize) * TABLE_STEPS + 2;
        let i0_beta = bessel_i0(beta);
        let table = (0..len)
            .map(|i| {
                let u = i as f64 / TABLE_STEPS as f64;
                if u >= half_width {
                    return 0.0;
                }
                let r = u / half_width;
                let kaiser = bessel_i0(beta * libm::sqrt(1.0 - r * r)) / i0_beta;
                2.0 * cutoff * sinc(2.0 * cutoff * u) * kaiser
            })
            .collect();
        Ok(Self { ratio, half_width, table })
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Kernel value at offset `u` input samples, by linear table interpolation.
    fn kernel(&self, u: f64) -> f64 {
        let pos = libm::fabs(u) * TABLE_STEPS as f64;
        let i = pos as usize;
        if i + 1 >= self.table.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        self.table[i] + frac * (self.table[i + 1] - self.table[i])
    }

    /// Resamples `input` to `round(len * ratio)` samples.
    pub fn process(&self, input: &[f64]) -> Vec<f64> {
        let n = input.len();
        let m = libm::round(n as f64 * self.ratio) as usize;
        let mut out = vec![0.0; m];
        for (j, o) in out.iter_mut().enumerate() {
            let p = j as f64 / self.ratio;
            let lo = libm::ceil(p - self.half_width).max(0.0) as usize;
            let hi = (libm::floor(p + self.half_width) as usize).min(n.saturating_sub(1));
            let mut acc = 0.0;
            if n > 0 && lo <= hi {
                for (k, &x) in input[lo..=hi].iter().enumerate() {
                    acc += x * self.kernel(p - (lo + k) as f64);
                }
            }
            *o = acc;
        }
        out
    }
}

/// Changes the clip length by `ratio` while keeping its nominal sample rate.
///
/// Played back at the original rate, every frequency is multiplied by
/// `1 / ratio` and every duration by `ratio`. `ratio == 1` returns the input
/// unchanged.
pub fn resample(clip: &AudioClip, ratio: f64) -> Result<AudioClip> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    if ratio == 1.0 {
        return Ok(clip.clone());
    }
    let r = Resampler::new(ratio)?;
    clip.with_samples(r.process(clip.samples()))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        libm::sin(PI * x) / (PI * x)
    }
}

/// Zeroth-order modified Bessel function of the first kind (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}
