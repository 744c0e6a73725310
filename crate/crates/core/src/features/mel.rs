use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// `2595 log10(1 + f/700)`.
pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * libm::log10(1.0 + f / 700.0)
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (libm::pow(10.0, m / 2595.0) - 1.0)
}

/// Triangular mel filters over the bins of a real FFT, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_bins: usize,
    centers: Vec<f64>,
    // per band: first nonzero bin and the weights from there on
    bands: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    /// `n_mels` triangles with `n_mels + 2` edge points equally spaced in
    /// mel between `f_lo` and `f_hi`; each rises from the previous band's
    /// center to its own center (weight 1) and falls to the next center.
    /// A band too narrow to reach any bin center puts weight 1 on the bin
    /// closest to its center.
    pub fn new(n_mels: usize, f_lo: f64, f_hi: f64, fft_size: usize, sample_rate: u32) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if f_hi > nyquist {
            return Err(Error::BandEdgeAboveNyquist { f_hi, nyquist });
        }
        if n_mels == 0 || !(f_lo >= 0.0 && f_lo < f_hi) || fft_size < 2 {
            return Err(Error::InvalidFeatureConfig(alloc::format!(
                "need n_mels >= 1, 0 <= f_lo < f_hi and fft_size >= 2 (got {n_mels}, {f_lo}, {f_hi}, {fft_size})"
            )));
        }
        let n_bins = fft_size / 2 + 1;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let (m_lo, m_hi) = (hz_to_mel(f_lo), hz_to_mel(f_hi));
        let step = (m_hi - m_lo) / (n_mels + 1) as f64;
        let edges: Vec<f64> = (0..n_mels + 2).map(|i| mel_to_hz(m_lo + i as f64 * step)).collect();

        let mut bands = Vec::with_capacity(n_mels);
        for b in 0..n_mels {
            let (lo, c, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let k0 = libm::ceil(lo / bin_hz).max(0.0) as usize;
            let k1 = (libm::floor(hi / bin_hz) as usize).min(n_bins - 1);
            let mut first = usize::MAX;
            let mut w = Vec::new();
            for k in k0..=k1 {
                let f = k as f64 * bin_hz;
                let v = if f <= c { (f - lo) / (c - lo) } else { (hi - f) / (hi - c) };
                if v > 0.0 {
                    if first == usize::MAX {
                        first = k;
                    }
                    w.resize(k - first, 0.0);
                    w.push(v);
                }
            }
            if w.is_empty() {
                first = (libm::round(c / bin_hz) as usize).min(n_bins - 1);
                w.push(1.0);
            }
            bands.push((first, w));
        }
        Ok(Self { n_bins, centers: edges[1..=n_mels].to_vec(), bands })
    }

    pub fn n_mels(&self) -> usize {
        self.bands.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    /// Center frequency of each band in Hz.
    pub fn center_frequencies(&self) -> &[f64] {
        &self.centers
    }

    /// Dense `n_mels x n_bins` weight matrix, row-major.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_mels() * self.n_bins];
        for (b, (first, w)) in self.bands.iter().enumerate() {
            m[b * self.n_bins + first..b * self.n_bins + first + w.len()].copy_from_slice(w);
        }
        m
    }

    /// `out[b] = sum_k W[b][k] * spectrum[k]`.
    pub fn apply(&self, spectrum: &[f64], out: &mut [f64]) {
        debug_assert_eq!(spectrum.len(), self.n_bins);
        for ((first, w), o) in self.bands.iter().zip(out.iter_mut()) {
            *o = w.iter().zip(&spectrum[*first..]).map(|(a, b)| a * b).sum();
        }
    }
}

/// Dense `n_mels x (fft_size/2 + 1)` mel weight matrix, row-major.
pub fn mel_filterbank(n_mels: usize, f_lo: f64, f_hi: f64, fft_size: usize, sample_rate: u32) -> Result<Vec<f64>> {
    Ok(MelFilterbank::new(n_mels, f_lo, f_hi, fft_size, sample_rate)?.to_dense())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_round_trip() {
        for f in [0.0, 27.5, 440.0, 1000.0, 16000.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9 * (1.0 + f));
        }
        assert!((hz_to_mel(1000.0) - 999.9855).abs() < 1e-3);
    }

    #[test]
    fn above_nyquist_is_rejected() {
        assert!(matches!(MelFilterbank::new(80, 27.5, 16000.0, 1024, 22050), Err(Error::BandEdgeAboveNyquist { .. })));
    }

    #[test]
    fn filters_are_unimodal_and_cover_flat_spectrum() {
        for fft in [1024, 2048, 8192] {
            let fb = MelFilterbank::new(80, 27.5, 16000.0, fft, 44100).unwrap();
            let dense = fb.to_dense();
            for row in dense.chunks(fb.n_bins()) {
                assert!(row.iter().all(|&w| w >= 0.0));
                let max = row.iter().cloned().fold(0.0, f64::max);
                assert!(max > 0.0);
                let support: Vec<f64> = row.iter().cloned().skip_while(|&w| w == 0.0).collect();
                let peak = support.iter().position(|&w| w == max).unwrap();
                assert!(support[..=peak].windows(2).all(|w| w[0] < w[1]));
                assert!(support[peak..].windows(2).all(|w| w[0] > w[1] || w[1] == 0.0));
            }
            let mut out = vec![0.0; 80];
            fb.apply(&vec![1.0; fb.n_bins()], &mut out);
            assert!(out.iter().all(|&v| v > 0.0));
        }
    }
}
