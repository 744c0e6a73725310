mod oracles;

use drumaug_core::analysis::{analysis_config, default_envelope_order, estimate_envelope};
use drumaug_core::augment::{remix_attacks, remix_noise};
use drumaug_core::features::{compute_mcms, McmsConfig};
use drumaug_core::signal::stft;
use drumaug_core::AudioClip;
use oracles::{rms, sine, snr_db};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

const SR: u32 = 44100;

fn noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect()
}

/// A single frame's envelope follows that realization's random peaks (its
/// worst bin strays 1.7 to 4.2 dB from the frame mean at order 22), so the
/// flatness oracle applies to the frame-averaged envelope, and to the
/// typical (median) frame.
#[test]
fn white_noise_envelope_is_flat() {
    let x = AudioClip::new(noise(SR as usize / 2, 0.1, 1), SR, "n").unwrap();
    let spec = stft(&x, &analysis_config(SR)).unwrap();
    let env = estimate_envelope(&spec, default_envelope_order(SR)).unwrap();
    let frames: Vec<usize> = spec.interior_frames().collect();
    let worst_dev = |e: &[f64]| {
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        e.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max)
    };
    let mut avg = vec![0.0; spec.n_bins()];
    let mut per_frame = Vec::new();
    for &t in &frames {
        for (a, v) in avg.iter_mut().zip(env.frame(t)) {
            *a += v / frames.len() as f64;
        }
        per_frame.push(worst_dev(env.frame(t)));
    }
    let avg_dev = worst_dev(&avg);
    assert!(avg_dev <= 3.0, "averaged envelope strays {avg_dev:.2} dB");
    per_frame.sort_by(f64::total_cmp);
    let median = per_frame[per_frame.len() / 2];
    assert!(median <= 3.0, "median frame strays {median:.2} dB");
}

/// Known formant response in dB.
fn formant_db(f: f64) -> f64 {
    -6.0 + 12.0 * (-((f - 1200.0) / 900.0).powi(2)).exp() + 8.0 * (-((f - 3500.0) / 1200.0).powi(2)).exp() - f / 1500.0
}

#[test]
fn envelope_tracks_a_formant_filter_at_the_harmonics() {
    let f0 = 220.0;
    let n = SR as usize / 2;
    let harmonics: Vec<usize> = (1..).take_while(|h| *h as f64 * f0 < 8000.0).collect();
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / SR as f64;
            harmonics
                .iter()
                .map(|&h| {
                    10f64.powf(formant_db(h as f64 * f0) / 20.0) * (2.0 * PI * h as f64 * f0 * t + h as f64).sin()
                })
                .sum::<f64>()
                * 0.05
        })
        .collect();
    let clip = AudioClip::new(x, SR, "vowel").unwrap();
    let spec = stft(&clip, &analysis_config(SR)).unwrap();
    let env = estimate_envelope(&spec, default_envelope_order(SR)).unwrap();
    let t = spec.n_frames() / 2;
    // a sinusoid of amplitude a reads a/2 after window-sum normalization
    let offset = 20.0 * (0.05f64 / 2.0).log10();
    for &h in harmonics.iter().filter(|&&h| (h as f64 * f0) < 7000.0) {
        let f = h as f64 * f0;
        let got = env.at(t, f / spec.bin_frequency(1));
        let want = formant_db(f) + offset;
        assert!((got - want).abs() < 3.0, "harmonic {h} ({f} Hz): {got:.2} vs {want:.2}");
    }
}

#[test]
fn remix_noise_on_a_mixture_lifts_only_the_noise() {
    let n = SR as usize;
    let tone = sine(700.0, SR as f64, n, 0.5);
    let nz = noise(n, 0.02, 3);
    let mix: Vec<f64> = tone.iter().zip(&nz).map(|(a, b)| a + b).collect();
    let y = remix_noise(&AudioClip::new(mix, SR, "mix").unwrap(), 2.0).unwrap();
    let inner = n / 10..9 * n / 10;
    // least-squares projection onto the known tone separates the components
    let fit = |sig: &[f64]| {
        let (s, c): (Vec<f64>, Vec<f64>) = (0..sig.len())
            .map(|i| {
                let ph = 2.0 * PI * 700.0 * i as f64 / SR as f64;
                (ph.sin(), ph.cos())
            })
            .unzip();
        let a = sig.iter().zip(&s).map(|(x, s)| x * s).sum::<f64>() * 2.0 / sig.len() as f64;
        let b = sig.iter().zip(&c).map(|(x, c)| x * c).sum::<f64>() * 2.0 / sig.len() as f64;
        let resid: Vec<f64> = sig.iter().zip(s.iter().zip(&c)).map(|(x, (s, c))| x - a * s - b * c).collect();
        ((a * a + b * b).sqrt(), rms(&resid))
    };
    let y_in = &y.samples()[inner.clone()];
    let (tone_amp, resid) = fit(y_in);
    assert!((tone_amp / 0.5 - 1.0).abs() < 0.05, "tone amplitude {tone_amp}");
    let lift = 20.0 * (resid / rms(&nz[inner])).log10();
    assert!((lift - 6.02).abs() < 1.5, "noise lift {lift:.2} dB");
}

#[test]
fn remixes_leave_a_pure_sine_alone() {
    let n = SR as usize;
    let tone = sine(440.0, SR as f64, n, 0.5);
    let clip = AudioClip::new(tone.clone(), SR, "a").unwrap();
    let inner = n / 10..9 * n / 10;
    let y = remix_noise(&clip, 0.1).unwrap();
    assert!(snr_db(&tone[inner.clone()], &y.samples()[inner.clone()]) > 30.0);
    let y = remix_attacks(&clip, 3.0).unwrap();
    assert!(snr_db(&tone[inner.clone()], &y.samples()[inner]) > 30.0);
}

#[test]
fn click_train_attacks_gain_six_db() {
    let n = SR as usize * 2;
    let sr = SR as f64;
    let mut x = vec![0.0; n];
    let clicks: Vec<usize> = (1..8).map(|k| k * n / 8).collect();
    for &c in &clicks {
        for i in 0..1500 {
            let t = i as f64 / sr;
            x[c + i] += 0.5 * (-t / 0.004).exp() * (2.0 * PI * 2500.0 * t).sin();
        }
    }
    let y = remix_attacks(&AudioClip::new(x.clone(), SR, "clicks").unwrap(), 2.0).unwrap();
    let w = (0.010 * sr) as usize;
    for &c in &clicks {
        let gain = 20.0 * (rms(&y.samples()[c..c + w]) / rms(&x[c..c + w])).log10();
        assert!((gain - 6.02).abs() < 1.5, "click at {c}: {gain:.2} dB");
    }
}

#[test]
fn louder_input_shifts_log_mel_by_ln10() {
    let cfg = McmsConfig::default();
    let x = noise(SR as usize / 2, 0.01, 4);
    let loud: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
    let a = compute_mcms(&AudioClip::new(x, SR, "q").unwrap(), &cfg).unwrap();
    let b = compute_mcms(&AudioClip::new(loud, SR, "l").unwrap(), &cfg).unwrap();
    let floor = (cfg.log_floor as f32).ln();
    for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
        if *p > floor + 5.0 {
            assert!((q - p - 10f32.ln()).abs() < 1e-3, "{p} -> {q}");
        }
    }
}
