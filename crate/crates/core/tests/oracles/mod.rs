//! Reference implementations used as test oracles. Each is written from
//! first principles, independent of the crate's own kernels.
#![allow(dead_code)]

use std::f64::consts::PI;

pub fn sine(freq: f64, sr: f64, n: usize, amp: f64) -> Vec<f64> {
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / sr).sin()).collect()
}

/// `10 log10(|ref|^2 / |ref - est|^2)` over the common length.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> f64 {
    let (mut s, mut e) = (0.0, 0.0);
    for (r, x) in reference.iter().zip(estimate) {
        s += r * r;
        e += (r - x) * (r - x);
    }
    if e == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (s / e).log10()
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt()
}

/// Magnitude of the Hann-windowed DTFT of `x` at `freq`, normalized so that
/// a unit-amplitude sinusoid at `freq` reads ~1.
pub fn dtft_mag(x: &[f64], freq: f64, sr: f64) -> f64 {
    let n = x.len();
    let (mut re, mut im, mut wsum) = (0.0, 0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos();
        let ph = 2.0 * PI * freq * i as f64 / sr;
        re += w * v * ph.cos();
        im -= w * v * ph.sin();
        wsum += w;
    }
    2.0 * (re * re + im * im).sqrt() / wsum
}

/// Frequency of the strongest sinusoid in `[lo, hi]`: coarse scan at an
/// eighth of the DFT resolution, then golden-section refinement.
pub fn tone_frequency(x: &[f64], sr: f64, lo: f64, hi: f64) -> f64 {
    let step = sr / x.len() as f64 / 8.0;
    let mut best = (lo, 0.0);
    let mut f = lo;
    while f <= hi {
        let m = dtft_mag(x, f, sr);
        if m > best.1 {
            best = (f, m);
        }
        f += step;
    }
    let (mut a, mut b) = (best.0 - step, best.0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if dtft_mag(x, c, sr) > dtft_mag(x, d, sr) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

pub fn cents_between(f: f64, reference: f64) -> f64 {
    1200.0 * (f / reference).log2()
}

/// Size of a maximum one-to-one matching between detections and truths
/// within `tol`, by exhaustive dynamic programming over subsets of truths.
pub fn brute_force_matching(det: &[f64], truth: &[f64], tol: f64) -> usize {
    assert!(truth.len() <= 16);
    let full = 1usize << truth.len();
    // best[mask] = most matches using exactly the truths in `mask` so far
    let mut best = vec![i64::MIN; full];
    best[0] = 0;
    for &d in det {
        let mut next = best.clone();
        for mask in 0..full {
            if best[mask] == i64::MIN {
                continue;
            }
            for (j, &t) in truth.iter().enumerate() {
                if mask & (1 << j) == 0 && (d - t).abs() <= tol + 1e-9 {
                    let m = mask | (1 << j);
                    next[m] = next[m].max(best[mask] + 1);
                }
            }
        }
        best = next;
    }
    best.into_iter().max().unwrap_or(0) as usize
}

/// Peak picking by exhaustion: among all sets of local maxima above the
/// threshold that respect the gap, the one whose scores (sorted descending,
/// ties broken by earlier frame) are lexicographically largest.
pub fn brute_force_peaks(v: &[f64], threshold: f64, min_gap_frames: usize) -> Vec<usize> {
    let n = v.len();
    let mut cands = Vec::new();
    for i in 0..n {
        if v[i] <= threshold {
            continue;
        }
        // first frame of a plateau, with lower values (or the edge) on both sides
        if i > 0 && v[i - 1] >= v[i] {
            continue;
        }
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        // a constant curve is not a peak
        if (j + 1 == n || v[j + 1] < v[i]) && !(i == 0 && j + 1 == n) {
            cands.push(i);
        }
    }
    assert!(cands.len() <= 16);
    let key = |set: &[usize]| {
        let mut s: Vec<(f64, i64)> = set.iter().map(|&i| (v[i], -(i as i64))).collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    };
    let mut best: Vec<usize> = Vec::new();
    for mask in 0usize..(1 << cands.len()) {
        let set: Vec<usize> = (0..cands.len()).filter(|b| mask & (1 << b) != 0).map(|b| cands[b]).collect();
        let ok = set.windows(2).all(|w| w[1] - w[0] >= min_gap_frames);
        if !ok {
            continue;
        }
        let (ka, kb) = (key(&set), key(&best));
        let better = ka
            .iter()
            .zip(&kb)
            .find(|(a, b)| a != b)
            .map(|(a, b)| a.partial_cmp(b).unwrap().is_gt())
            .unwrap_or(ka.len() > kb.len());
        if better {
            best = set;
        }
    }
    best
}
