use std::io::Cursor;
use std::path::Path;

use drumaug::annotations::{format_annotation, format_detections, parse_annotation, read_annotation, write_annotation};
use drumaug::audio::{decode_wav, encode_wav, load_audio, write_wav};
use drumaug::checkpoint::{decode_checkpoint, encode_checkpoint, format_training_log, quantize, Checkpoint};
use drumaug::config::RunConfig;
use drumaug::featcache::{decode_features, encode_features, read_features, write_features};
use drumaug::Error;
use drumaug_core::eval::{Detection, DetectionList, Instrument, Onset, OnsetAnnotation};
use drumaug_core::features::McmsTensor;
use drumaug_core::model::{forward, EpochRecord, ModelParams, Topology, TrainingLog};
use drumaug_core::AudioClip;
use proptest::prelude::*;

fn int_wav(bits: u16, channels: u16, frames: &[&[i32]]) -> Vec<u8> {
    let spec =
        hound::WavSpec { channels, sample_rate: 44100, bits_per_sample: bits, sample_format: hound::SampleFormat::Int };
    let mut buf = Cursor::new(Vec::new());
    let mut w = hound::WavWriter::new(&mut buf, spec).unwrap();
    for f in frames {
        for &s in *f {
            w.write_sample(s).unwrap();
        }
    }
    w.finalize().unwrap();
    buf.into_inner()
}

#[test]
fn full_scale_16_bit_square_maps_to_known_values() {
    let frames: Vec<&[i32]> = (0..100).map(|i| if i % 2 == 0 { &[-32768][..] } else { &[32767][..] }).collect();
    let clip = decode_wav(&int_wav(16, 1, &frames), "sq", Path::new("sq.wav")).unwrap();
    let mut values: Vec<f64> = clip.samples().to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    assert_eq!(values, [-1.0, 32767.0 / 32768.0]);
    assert_eq!(clip.sample_rate(), 44100);
}

#[test]
fn twenty_four_bit_and_stereo_inputs() {
    let frames: Vec<&[i32]> = vec![&[-8388608, 8388607], &[4194304, 0]];
    let clip = decode_wav(&int_wav(24, 2, &frames), "st", Path::new("st.wav")).unwrap();
    assert_eq!(clip.len(), 2);
    assert_eq!(clip.samples()[0], (-1.0 + 8388607.0 / 8388608.0) / 2.0);
    assert_eq!(clip.samples()[1], 0.25);
}

#[test]
fn unsupported_formats_are_rejected() {
    let frames: Vec<&[i32]> = vec![&[1], &[2]];
    let err = decode_wav(&int_wav(8, 1, &frames), "x", Path::new("x.wav")).unwrap_err();
    assert!(matches!(err, Error::Format { .. }), "{err}");
    assert!(decode_wav(b"RIFF....", "x", Path::new("x.wav")).is_err());
}

#[test]
fn float_wav_round_trip_is_exact_for_f32_values() {
    let samples: Vec<f64> = (0..500).map(|i| ((i as f64 * 0.37).sin() * 0.9) as f32 as f64).collect();
    let clip = AudioClip::new(samples, 48000, "f").unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sub/f.wav");
    write_wav(&path, &clip).unwrap();
    let back = load_audio(&path).unwrap();
    assert_eq!(back, clip);
    assert_eq!(encode_wav(&back), std::fs::read(&path).unwrap());
}

#[test]
fn annotation_parsing() {
    let a = parse_annotation("# header\n0.5\tbd\n\n0.25 hh\n1.0\tSD\n", "t").unwrap();
    assert_eq!(a.times(Instrument::Bd), [0.5]);
    assert_eq!(a.events()[0], Onset { time: 0.25, instrument: Instrument::Hh });
    assert!(parse_annotation("0.5\n", "t").is_err());
    assert!(parse_annotation("x\tbd\n", "t").is_err());
    assert!(parse_annotation("0.5\ttom\n", "t").is_err());
    assert!(parse_annotation("-1\tbd\n", "t").is_err());
}

#[test]
fn detections_are_written_to_the_millisecond() {
    let d = DetectionList::new(vec![
        Detection { time: 3.0 * 0.01, instrument: Instrument::Sd, score: 0.9 },
        Detection { time: 0.01, instrument: Instrument::Bd, score: 0.8 },
    ]);
    assert_eq!(format_detections(&d), "0.010\tbd\n0.030\tsd\n");
}

proptest! {
    #[test]
    fn annotation_times_round_trip_bit_exactly(times in prop::collection::vec((0.0f64..1000.0, 0usize..3), 0..40)) {
        let events: Vec<Onset> = times.iter().map(|&(t, i)| Onset { time: t, instrument: Instrument::ALL[i] }).collect();
        let a = OnsetAnnotation::new(events, "p").unwrap();
        let back = parse_annotation(&format_annotation(&a), "p").unwrap();
        prop_assert_eq!(back, a);
    }
}

#[test]
fn annotation_file_round_trip_takes_id_from_name() {
    let dir = tempfile::tempdir().unwrap();
    let a = OnsetAnnotation::new(vec![Onset { time: 0.1 * 3.0, instrument: Instrument::Hh }], "trk").unwrap();
    let path = dir.path().join("trk.txt");
    write_annotation(&path, &a).unwrap();
    assert_eq!(read_annotation(&path).unwrap(), a);
}

fn tensor(frames: usize, bands: usize) -> McmsTensor {
    let data = (0..3 * frames * bands).map(|i| (i as f32 * 0.731).sin() * 5.0 - 3.0).collect();
    McmsTensor::from_raw(data, frames, bands, 0.01, "feat").unwrap()
}

#[test]
fn feature_cache_layout_is_bit_exact() {
    let t = tensor(4, 80);
    let bytes = encode_features(&t);
    assert_eq!(&bytes[..4], b"MCMS");
    let word = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().unwrap());
    assert_eq!([word(1), word(2), word(3), word(4)], [1, 3, 80, 4]);
    assert_eq!(f32::from_le_bytes(bytes[20..24].try_into().unwrap()), 10.0);
    assert_eq!(bytes.len(), 24 + 4 * 3 * 4 * 80);
    // channel 1, frame 2, band 5 sits at (1 * 4 + 2) * 80 + 5
    let k = 24 + 4 * ((4 + 2) * 80 + 5);
    assert_eq!(f32::from_le_bytes(bytes[k..k + 4].try_into().unwrap()), t.get(1, 2, 5));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("feat.mcms");
    write_features(&path, &t).unwrap();
    let back = read_features(&path).unwrap();
    assert_eq!(back, t);
    assert_eq!(back.hop_seconds(), 0.01);
}

#[test]
fn corrupt_feature_files_are_rejected() {
    let bytes = encode_features(&tensor(3, 12));
    let p = Path::new("c.mcms");
    assert!(decode_features(&bytes[..bytes.len() - 1], "c", p).is_err());
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(decode_features(&bad, "c", p).is_err());
    let mut bad = bytes.clone();
    bad[4] = 9;
    assert!(decode_features(&bad, "c", p).is_err());
    let mut bad = bytes;
    bad[8] = 2;
    assert!(decode_features(&bad, "c", p).is_err());
}

#[test]
fn checkpoint_round_trip_preserves_quantized_model() {
    let topo = Topology::tiny();
    let params = ModelParams::init(topo, 5).unwrap();
    let q = quantize(&params);
    let ck = Checkpoint {
        params: q.clone(),
        meta: [("instrument".to_string(), "sd".to_string()), ("threshold".to_string(), "0.35".to_string())].into(),
    };
    let bytes = encode_checkpoint(&ck);
    assert_eq!(&bytes[..4], b"DACK");
    let back = decode_checkpoint(&bytes, Path::new("m.ckpt")).unwrap();
    assert_eq!(back, ck);
    assert_eq!(back.instrument(), Some(Instrument::Sd));
    assert_eq!(back.threshold(), Some(0.35));
    let patch: Vec<f64> = (0..topo.input_len()).map(|i| (i as f64 * 0.1).cos()).collect();
    assert_eq!(forward(&back.params, &patch).unwrap(), forward(&q, &patch).unwrap());
    // quantization error is at f32 resolution
    for (a, b) in params.values().iter().zip(q.values()) {
        assert!((a - b).abs() <= a.abs() * 1e-7);
    }
    assert_eq!(encode_checkpoint(&back), bytes);
}

#[test]
fn checkpoint_shape_table_must_match_topology() {
    let ck =
        Checkpoint { params: quantize(&ModelParams::init(Topology::tiny(), 1).unwrap()), meta: Default::default() };
    let bytes = encode_checkpoint(&ck);
    let p = Path::new("m.ckpt");
    assert!(decode_checkpoint(&bytes[..bytes.len() - 4], p).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode_checkpoint(&extra, p).is_err());
    // change the tiny topology's hidden width in the metadata JSON
    let text = String::from_utf8_lossy(&bytes).replace("\"hidden\":5", "\"hidden\":6");
    assert!(text.contains("\"hidden\":6"));
    let meta_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mut bad = bytes.clone();
    let meta = std::str::from_utf8(&bytes[12..12 + meta_len]).unwrap().replace("\"hidden\":5", "\"hidden\":6");
    bad.splice(12..12 + meta_len, meta.bytes());
    let err = decode_checkpoint(&bad, p).unwrap_err().to_string();
    assert!(err.contains("topology expects"), "{err}");
}

#[test]
fn training_log_lines() {
    let log = TrainingLog {
        epochs: vec![
            EpochRecord { epoch: 1, train_loss: 0.5, validation_f: 0.25 },
            EpochRecord { epoch: 2, train_loss: 0.25, validation_f: 0.75 },
        ],
        best_epoch: 2,
        best_validation_f: 0.75,
    };
    let text = format_training_log(Instrument::Hh, &log);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[1], "1\thh\t0.5\t0.25");
    assert_eq!(lines[2], "2\thh\t0.25\t0.75");
    assert_eq!(lines[3], "# best_epoch\t2");
}

const CONFIG_A: &str = r#"
seeds = [1, 2]
strategies = ["original", "dropout(0.25)"]

[dataset]
audio_dir = "a"
annotation_dir = "b"
subsets = ["X", "Y"]

[train]
max_epochs = 5
batch_size = 64
"#;

const CONFIG_B: &str = r#"
strategies = ["rn"]
[train]
batch_size = 64
max_epochs = 5
[dataset]
subsets = ["X", "Y"]
annotation_dir = "b"
audio_dir = "a"
"#;

#[test]
fn config_hash_ignores_field_order_and_strategies() {
    let a = RunConfig::from_toml(CONFIG_A).unwrap();
    let b = RunConfig::from_toml(&format!("seeds = [1, 2]\n{CONFIG_B}")).unwrap();
    assert_eq!(a.config_hash(), b.config_hash());
    assert_eq!(a.config_hash().len(), 16);
    let mut c = a.clone();
    c.train.max_epochs = 6;
    assert_ne!(c.config_hash(), a.config_hash());
    let mut d = a.clone();
    d.output_root = "elsewhere".into();
    assert_eq!(d.config_hash(), a.config_hash());
    let back = RunConfig::from_toml(&a.to_toml()).unwrap();
    assert_eq!(back, a);
}

#[test]
fn config_errors_exit_with_two() {
    let err = RunConfig::from_toml("[dataset]\naudio_dir = 3\n").unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let err = RunConfig::from_toml(&format!("{CONFIG_A}\nbogus = 1\n")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let dir = tempfile::tempdir().unwrap();
    for s in ["X", "Y"] {
        std::fs::create_dir_all(dir.path().join("a").join(s)).unwrap();
    }
    std::fs::create_dir_all(dir.path().join("b")).unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, CONFIG_A).unwrap();
    let mut cfg = RunConfig::from_file(&path).unwrap();
    cfg.validate().unwrap();
    cfg.strategies.push("mixup".into());
    assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
    cfg.strategies.pop();
    cfg.features.n_mels = 40;
    assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
}
