mod oracles;

use drumaug_core::features::{compute_mcms, hz_to_mel, mel_to_hz, McmsConfig, MelFilterbank};
use drumaug_core::AudioClip;

#[test]
fn mel_scale_matches_the_log_formula() {
    for f in [0.0, 27.5, 440.0, 1000.0, 8000.0, 16000.0] {
        let m = 2595.0 * (1.0 + f / 700.0_f64).log10();
        assert!((hz_to_mel(f) - m).abs() < 1e-9);
        assert!((mel_to_hz(m) - f).abs() < 1e-6);
    }
    assert!((hz_to_mel(1000.0) - 1000.0).abs() < 0.1);
}

#[test]
fn filter_centers_are_evenly_spaced_in_mel() {
    let fb = MelFilterbank::new(80, 27.5, 16000.0, 2048, 44100).unwrap();
    let mels: Vec<f64> = fb.center_frequencies().iter().map(|&f| hz_to_mel(f)).collect();
    let step = (hz_to_mel(16000.0) - hz_to_mel(27.5)) / 81.0;
    for (i, m) in mels.iter().enumerate() {
        assert!((m - (hz_to_mel(27.5) + (i + 1) as f64 * step)).abs() < 1e-6);
    }
}

#[test]
fn sine_lights_the_band_around_its_frequency() {
    let cfg = McmsConfig::default();
    let x = AudioClip::new(oracles::sine(2000.0, 44100.0, 44100, 0.5), 44100, "s").unwrap();
    let m = compute_mcms(&x, &cfg).unwrap();
    assert_eq!(m.n_frames(), 100);
    let fb = MelFilterbank::new(80, 27.5, 16000.0, 8192, 44100).unwrap();
    let nearest = fb
        .center_frequencies()
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 2000.0).abs().total_cmp(&(b.1 - 2000.0).abs()))
        .unwrap()
        .0;
    for c in 0..3 {
        let frame = m.frame(c, 50);
        let loudest = frame.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(loudest.abs_diff(nearest) <= 1, "channel {c}: band {loudest}, expected {nearest}");
    }
}

#[test]
fn resampled_input_gives_the_same_frame_grid() {
    let cfg = McmsConfig::default();
    let x = AudioClip::new(oracles::sine(500.0, 48000.0, 48000, 0.5), 48000, "s").unwrap();
    let m = compute_mcms(&x, &cfg).unwrap();
    assert_eq!(m.n_frames(), 100);
    assert_eq!(m.hop_seconds(), 0.01);
}
