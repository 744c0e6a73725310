mod oracles;

use drumaug_core::signal::{cents_to_ratio, resample, Resampler};
use drumaug_core::AudioClip;
use oracles::{cents_between, dtft_mag, sine, tone_frequency};
use std::f64::consts::PI;

const SR: f64 = 44100.0;

/// Length ratios of the transposition grid (-300..300 cents in 100-cent steps).
fn grid_ratios() -> Vec<f64> {
    [-300.0, -200.0, -100.0, 100.0, 200.0, 300.0].iter().map(|&t| cents_to_ratio(-t)).collect()
}

#[test]
fn downsampled_sine_is_a_semitone_higher() {
    let x = AudioClip::new(sine(440.0, SR, 44100, 0.5), 44100, "a").unwrap();
    let y = resample(&x, cents_to_ratio(-100.0)).unwrap();
    let f = tone_frequency(&y.samples()[4000..36000], SR, 440.0, 500.0);
    assert!(cents_between(f, 465.6376).abs() < 5.0, "{f}");
}

#[test]
fn three_semitone_up_shortens_to_0_8409() {
    let x = AudioClip::new(vec![0.1; 44100], 44100, "a").unwrap();
    let y = resample(&x, cents_to_ratio(-300.0)).unwrap();
    assert!((y.len() as f64 - 0.840896 * 44100.0).abs() <= 1.0);
    assert_eq!(y.sample_rate(), 44100);
}

#[test]
fn round_trip_restores_band_limited_signal() {
    let n = 20000;
    // partials below 0.4 x Nyquist
    let x: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / SR;
            (2.0 * PI * 523.0 * t).sin()
                + 0.5 * (2.0 * PI * 2900.0 * t).sin()
                + 0.3 * (2.0 * PI * 7100.0 * t + 1.0).sin()
        })
        .collect();
    for r in grid_ratios() {
        let y = Resampler::new(r).unwrap().process(&x);
        let z = Resampler::new(1.0 / r).unwrap().process(&y);
        assert!((z.len() as isize - n as isize).abs() <= 2, "ratio {r}: {}", z.len());
        let inner = 500..n - 500;
        let (mut xy, mut xx, mut zz) = (0.0, 0.0, 0.0);
        for i in inner {
            xy += x[i] * z[i];
            xx += x[i] * x[i];
            zz += z[i] * z[i];
        }
        let corr = xy / (xx * zz).sqrt();
        assert!(corr > 0.99, "ratio {r}: correlation {corr}");
    }
}

/// Linear chirp from `f0` to `f1` Hz.
fn chirp(f0: f64, f1: f64, n: usize) -> Vec<f64> {
    let dur = n as f64 / SR;
    (0..n)
        .map(|i| {
            let t = i as f64 / SR;
            (2.0 * PI * (f0 * t + 0.5 * (f1 - f0) / dur * t * t)).sin()
        })
        .collect()
}

/// Shrinking by `r < 1` must remove everything the output cannot represent:
/// a sweep through the input band above the output Nyquist comes out below
/// -70 dB.
#[test]
fn sweep_above_output_nyquist_is_suppressed() {
    for r in grid_ratios().into_iter().filter(|&r| r < 1.0) {
        let nyq_out = 0.5 * SR * r;
        let x = chirp(nyq_out, 0.98 * 0.5 * SR, 30000);
        let y = Resampler::new(r).unwrap().process(&x);
        let inner = &y[1000..y.len() - 1000];
        let level = 20.0 * (oracles::rms(inner) / oracles::rms(&x)).log10();
        assert!(level < -70.0, "ratio {r}: {level:.1} dB");
    }
}

/// Stretching by `r > 1` must not create images: a tone at 0.95 x input
/// Nyquist leaves its mirror image below -70 dB.
#[test]
fn stretching_leaves_no_images() {
    for r in grid_ratios().into_iter().filter(|&r| r > 1.0) {
        let f = 0.95 * 0.5 * SR;
        let x = sine(f, SR, 30000, 1.0);
        let y = Resampler::new(r).unwrap().process(&x);
        let inner = &y[2000..y.len() - 2000];
        // as played back at the original rate
        let main = f / r;
        let image = (SR - f) / r;
        let m = dtft_mag(inner, main, SR);
        let a = dtft_mag(inner, image, SR);
        let level = 20.0 * (a / m).log10();
        assert!(m > 0.3, "ratio {r}: passband tone lost ({m})");
        assert!(level < -70.0, "ratio {r}: image at {level:.1} dB");
    }
}
