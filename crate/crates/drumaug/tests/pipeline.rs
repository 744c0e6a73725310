use std::path::{Path, PathBuf};
use std::process::Command;

use drumaug::annotations::write_annotation;
use drumaug::audio::write_wav;
use drumaug::checkpoint::{load_checkpoint, quantize, Checkpoint};
use drumaug::pipeline::transcribe;
use drumaug::{DatasetConfig, Run, RunConfig};
use drumaug_core::eval::Instrument;
use drumaug_core::features::McmsConfig;
use drumaug_core::model::{ModelParams, Topology, TrainConfig};
use drumaug_core::synth::{synth_dataset, SynthConfig, SUBSETS};
use drumaug_core::AudioClip;

/// Writes `per_subset` synthetic tracks of `duration` seconds for the first
/// `subsets` subsets and returns a small-model config over them.
fn dataset(dir: &Path, subsets: usize, per_subset: usize, duration: f64) -> RunConfig {
    let names = &SUBSETS[..subsets];
    for t in synth_dataset(&SynthConfig { duration, ..SynthConfig::default() }, names, per_subset).unwrap() {
        write_wav(&dir.join("audio").join(&t.subset).join(format!("{}.wav", t.clip.id())), &t.clip).unwrap();
        write_annotation(&dir.join("ann").join(&t.subset).join(format!("{}.txt", t.clip.id())), &t.annotation).unwrap();
    }
    let mut cfg = RunConfig::new(DatasetConfig {
        audio_dir: dir.join("audio"),
        annotation_dir: dir.join("ann"),
        subsets: names.iter().map(|s| s.to_string()).collect(),
    });
    cfg.output_root = dir.to_path_buf();
    cfg.features.n_mels = 12;
    cfg.model = Topology::tiny();
    cfg.train = TrainConfig {
        max_epochs: 2,
        patience: 1,
        batch_size: 32,
        max_positives_per_epoch: Some(32),
        ..TrainConfig::default()
    };
    cfg.seeds = vec![1];
    cfg.grid.remix_attacks = vec![2.0];
    cfg.grid.transpose = vec![200.0];
    cfg.grid.envelope = vec![0.0];
    cfg.grid.remix_noise = vec![0.1, 0.3, 0.6, 1.5, 2.0, 3.0];
    cfg
}

fn strategies(cfg: &mut RunConfig, s: &[&str]) {
    cfg.strategies = s.iter().map(|s| s.to_string()).collect();
}

fn wavs_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    if let Ok(rd) = std::fs::read_dir(dir) {
        for e in rd.flatten() {
            let p = e.path();
            if p.is_dir() {
                out.extend(wavs_under(&p));
            } else if p.extension().is_some_and(|e| e == "wav") {
                out.push(p);
            }
        }
    }
    out
}

/// A stage manifest with its timing block removed.
fn manifest_without_timings(path: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timings");
    v
}

#[test]
fn remix_noise_on_two_files_gives_twelve_items_and_reruns_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = dataset(dir.path(), 2, 1, 1.0);
    strategies(&mut cfg, &["rn"]);
    let run = Run::new(cfg.clone(), 2).unwrap();
    let s = run.augment().unwrap();
    assert_eq!(s.exit_code(), 0);
    let manifest = std::fs::read_to_string(run.root().join("augmented/rn.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 1 + 12);
    assert_eq!(wavs_under(&run.root().join("augmented")).len(), 12);
    let row: Vec<&str> = manifest.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(row[..4], ["augmented/2005/2005_000__rn_0.1.wav", "2005_000", "rn", "0.1"]);
    assert!(run.root().join(row[7]).is_file());

    let before = manifest_without_timings(&run.root().join("augmented/manifest.json"));
    let again = Run::new(cfg, 1).unwrap().augment().unwrap();
    assert_eq!(again.reused, 12);
    assert_eq!(std::fs::read_to_string(run.root().join("augmented/rn.tsv")).unwrap(), manifest);
    assert_eq!(manifest_without_timings(&run.root().join("augmented/manifest.json")), before);
}

#[test]
fn original_strategy_writes_only_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), 2, 1, 1.0);
    let run = Run::new(cfg, 1).unwrap();
    let s = run.augment().unwrap();
    assert_eq!(s.exit_code(), 0);
    assert!(wavs_under(&run.root().join("augmented")).is_empty());
    let manifest = std::fs::read_to_string(run.root().join("augmented/original.tsv")).unwrap();
    assert_eq!(manifest.lines().count(), 1);
}

#[test]
fn missing_annotation_is_skipped_and_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = dataset(dir.path(), 2, 1, 1.0);
    std::fs::remove_file(dir.path().join("ann/GEN/GEN_000.txt")).unwrap();
    strategies(&mut cfg, &["rn"]);
    let run = Run::new(cfg, 1).unwrap();
    let s = run.augment().unwrap();
    assert_eq!(s.exit_code(), 1);
    assert_eq!(s.failures.len(), 1);
    assert_eq!(s.failures[0].item, "GEN_000");
    assert_eq!(wavs_under(&run.root().join("augmented")).len(), 6);
}

#[test]
fn campaign_trains_every_cell_reproducibly_and_reports_the_reference_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = dataset(dir.path(), 4, 2, 2.0);
    cfg.seeds = vec![1, 2, 3];
    let run = Run::new(cfg.clone(), 2).unwrap();
    assert_eq!(run.features().unwrap().exit_code(), 0);
    let s = run.train().unwrap();
    assert_eq!(s.exit_code(), 0, "{:?}", s.failures);
    let ckpt_dir = run.root().join("checkpoints/original");
    let mut ckpts: Vec<PathBuf> = std::fs::read_dir(&ckpt_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "ckpt"))
        .collect();
    ckpts.sort();
    assert_eq!(ckpts.len(), 36);
    let first = load_checkpoint(&ckpts[0]).unwrap();
    assert!(first.threshold().is_some() && first.instrument().is_some());
    let bytes: Vec<Vec<u8>> = ckpts.iter().map(|p| std::fs::read(p).unwrap()).collect();

    let (report, es) = run.evaluate().unwrap();
    assert_eq!(es.exit_code(), 0);
    let row = report.row("Orig.").unwrap();
    assert_eq!(row.report.runs, 36);
    let tsv = std::fs::read_to_string(run.root().join("reports/report.tsv")).unwrap();
    assert!(tsv.lines().nth(1).unwrap().starts_with("Orig.\t"));

    // retraining from scratch gives the same bytes
    std::fs::remove_dir_all(&ckpt_dir).unwrap();
    Run::new(cfg, 1).unwrap().train().unwrap();
    for (p, b) in ckpts.iter().zip(&bytes) {
        assert_eq!(&std::fs::read(p).unwrap(), b, "{}", p.display());
    }
    let (again, _) = run.evaluate().unwrap();
    assert_eq!(std::fs::read_to_string(run.root().join("reports/report.tsv")).unwrap(), tsv);
    assert_eq!(again.rows.len(), 1);
}

#[test]
fn transformation_strategies_give_one_row_each_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = dataset(dir.path(), 4, 2, 1.5);
    cfg.grid.remix_noise = vec![2.0];
    strategies(&mut cfg, &["original", "dropout(0.25)", "rn", "ra", "t", "t_nc", "all"]);
    let run = Run::new(cfg.clone(), 2).unwrap();
    let (report, stages) = run.crossval().unwrap();
    for s in &stages {
        assert_eq!(s.exit_code(), 0, "{}: {:?}", s.stage, s.failures);
    }
    let labels: Vec<&str> = report.rows.iter().map(|r| r.report.label.as_str()).collect();
    assert_eq!(labels, ["Orig.", "Drop. 0.25", "rn", "ra", "t", "t nc", "All"]);
    let dropout = load_checkpoint(&run.root().join("checkpoints/dropout-0.25/2005_s1_bd.ckpt")).unwrap();
    assert_eq!(dropout.meta["strategy"], "dropout(0.25)");

    let manifests =
        ["augmented/manifest.json", "features/manifest.json", "checkpoints/manifest.json", "reports/manifest.json"];
    let before: Vec<_> = manifests.iter().map(|m| manifest_without_timings(&run.root().join(m))).collect();
    let tsv = std::fs::read_to_string(run.root().join("reports/report.tsv")).unwrap();
    let (_, stages) = Run::new(cfg, 1).unwrap().crossval().unwrap();
    assert_eq!(stages[2].reused, 7 * 12);
    let after: Vec<_> = manifests.iter().map(|m| manifest_without_timings(&run.root().join(m))).collect();
    assert_eq!(after, before);
    assert_eq!(std::fs::read_to_string(run.root().join("reports/report.tsv")).unwrap(), tsv);
}

#[test]
fn evaluating_without_checkpoints_gives_an_empty_report_and_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dataset(dir.path(), 2, 1, 1.0);
    let run = Run::new(cfg, 1).unwrap();
    let (report, s) = run.evaluate().unwrap();
    assert!(report.rows.is_empty());
    assert_eq!(s.exit_code(), 1);
    let tsv = std::fs::read_to_string(run.root().join("reports/report.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 1);
}

fn checkpoint(inst: Instrument, threshold: f64) -> Checkpoint {
    Checkpoint {
        params: quantize(&ModelParams::init(Topology::tiny(), 4).unwrap()),
        meta: [("instrument".to_string(), inst.to_string()), ("threshold".to_string(), threshold.to_string())].into(),
    }
}

#[test]
fn transcription_of_silence_is_empty() {
    let fcfg = McmsConfig { n_mels: 12, ..McmsConfig::default() };
    let silence = AudioClip::new(vec![0.0; 44100], 44100, "s").unwrap();
    let cks: Vec<Checkpoint> = Instrument::ALL.iter().map(|&i| checkpoint(i, 0.0)).collect();
    assert!(transcribe(&cks, &silence, &fcfg, 0.03).unwrap().is_empty());
}

#[test]
fn transcription_is_deterministic_on_the_hop_grid() {
    let fcfg = McmsConfig { n_mels: 12, ..McmsConfig::default() };
    let t = &synth_dataset(&SynthConfig { duration: 2.0, ..SynthConfig::default() }, &SUBSETS[..1], 1).unwrap()[0];
    let cks: Vec<Checkpoint> = Instrument::ALL.iter().map(|&i| checkpoint(i, 0.0)).collect();
    let a = transcribe(&cks, &t.clip, &fcfg, 0.03).unwrap();
    let b = transcribe(&cks, &t.clip, &fcfg, 0.03).unwrap();
    assert_eq!(a, b);
    assert!(!a.is_empty());
    for d in a.detections() {
        assert!((d.time * 100.0 - (d.time * 100.0).round()).abs() < 1e-9, "{}", d.time);
    }
    let low = AudioClip::new(vec![0.0; 16000], 16000, "l").unwrap();
    let err = transcribe(&cks, &low, &fcfg, 0.03).unwrap_err();
    assert!(err.to_string().contains("below the frontend minimum"), "{err}");
}

fn drumaug(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_drumaug")).args(args).env("DRUMAUG_WORKERS", "1").output().unwrap()
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_str().unwrap();
    let out = drumaug(&["synth", root, "--per-subset", "1", "--duration", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let config = dir.path().join("config.toml");
    let cfg = config.to_str().unwrap();

    let out = drumaug(&["augment", "-c", cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = drumaug(&["augment", "-c", cfg, "-s", "mixup"]);
    assert_eq!(out.status.code(), Some(2));
    let out = drumaug(&["train", "-c", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = drumaug(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    let out = drumaug(&["evaluate", "-c", cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 1);

    let wav = dir.path().join("audio/2005/2005_000.wav");
    let ck = dir.path().join("bd.ckpt");
    let params = quantize(&ModelParams::init(Topology::default(), 2).unwrap());
    let meta = [("instrument".to_string(), "bd".to_string()), ("threshold".to_string(), "0.1".to_string())].into();
    drumaug::checkpoint::save_checkpoint(&ck, &Checkpoint { params, meta }).unwrap();
    let out = drumaug(&["transcribe", "-k", ck.to_str().unwrap(), wav.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.ends_with("\tbd")));
}
