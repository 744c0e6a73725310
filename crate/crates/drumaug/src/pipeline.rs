//! Campaign stages over a run directory `runs/<hash>/`:
//!
//! ```text
//! augmented/<subset>/<parent>__<slug>.{wav,txt}   index.tsv, <strategy>.tsv, manifest.json
//! features/<subset>/<id>.mcms                      index.tsv, manifest.json
//! checkpoints/<strategy>/<subset>_s<seed>_<inst>.{ckpt,log}   manifest.json
//! reports/report.tsv, report.json, manifest.json
//! ```
//!
//! Every stage skips items whose recorded input digest still matches, so
//! re-running with unchanged inputs rewrites nothing but identical
//! manifests. Items inside a stage run on a bounded worker pool; a failing
//! item is reported and the rest of the stage carries on.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use drumaug_core::augment::{augment_item, derived_id, AugmentationKind, AugmentationSpec, SourceItem};
use drumaug_core::eval::{
    aggregate, compute_metrics, pick_peaks, test_counts, train_job, validation_score, CrossValJob, CrossValPlan,
    DetectionList, Instrument, MatchCounts, OnsetAnnotation, Scores, Strategy, StrategyReport, TrackData, TrackInfo,
};
use drumaug_core::features::{compute_mcms, McmsConfig, McmsTensor};
use drumaug_core::model::predict_curve;
use drumaug_core::AudioClip;
use rayon::prelude::*;
use serde::Serialize;

use crate::annotations::{read_annotation, write_annotation};
use crate::audio::{decode_wav, file_id, load_audio, write_wav};
use crate::checkpoint::{format_training_log, load_checkpoint, quantize, save_checkpoint, Checkpoint};
use crate::config::{hex_digest, hex_digest_parts, RunConfig};
use crate::error::{read, write_atomic, Error, Result};
use crate::featcache::{read_features, write_features};
use crate::report::{format_report_tsv, Report, ReportJob, ReportRow};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable bounding the worker pool.
pub const WORKERS_ENV: &str = "DRUMAUG_WORKERS";

/// Pool size: the explicit value, else `DRUMAUG_WORKERS`, else the number of CPUs.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .or_else(|| std::env::var(WORKERS_ENV).ok()?.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Directory-safe name of a strategy.
pub fn strategy_slug(s: &Strategy) -> String {
    match *s {
        Strategy::Original => "original".into(),
        Strategy::Dropout(p) => format!("dropout-{p}"),
        Strategy::Gauss(v) => format!("gauss-{v}"),
        Strategy::Augment(k) => k.label().into(),
        Strategy::All => "all".into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemFailure {
    pub item: String,
    pub error: String,
}

/// What one stage produced.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StageSummary {
    pub stage: String,
    /// Every output of the stage, written now or reused, relative to the run directory.
    pub outputs: Vec<String>,
    /// Items skipped because their outputs were up to date.
    pub reused: usize,
    pub failures: Vec<ItemFailure>,
}

impl StageSummary {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }
}

#[derive(Serialize)]
struct StageManifest<'a> {
    config_hash: &'a str,
    tool_version: &'a str,
    stage: &'a str,
    inputs: &'a [String],
    outputs: &'a [String],
    failures: &'a [ItemFailure],
    timings: Timings,
}

#[derive(Serialize)]
struct Timings {
    seconds: f64,
}

/// An original track found in the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceTrack {
    pub id: String,
    pub subset: String,
    pub audio: PathBuf,
    pub annotation: PathBuf,
}

/// Key-to-digest table stored as sorted TSV.
#[derive(Debug, Default)]
struct Index(BTreeMap<String, String>);

impl Index {
    fn load(path: &Path) -> Self {
        let text = std::fs::read_to_string(path).unwrap_or_default();
        Index(text.lines().filter_map(|l| l.split_once('\t')).map(|(k, v)| (k.into(), v.into())).collect())
    }

    fn save(&self, path: &Path) -> Result<()> {
        let text: String = self.0.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect();
        write_atomic(path, text.as_bytes())
    }
}

/// A track of a campaign: an original or a derivative of one.
#[derive(Debug, Clone)]
struct CampaignTrack {
    info: TrackInfo,
    source: usize,
    spec: Option<AugmentationSpec>,
}

/// Features and labels of a plan's tracks; tracks not loaded hold empty placeholders.
struct LoadedData {
    items: Vec<(McmsTensor, OnsetAnnotation)>,
}

impl LoadedData {
    fn views(&self) -> Vec<TrackData<'_>> {
        self.items.iter().map(|(f, a)| TrackData { features: f, annotation: a }).collect()
    }
}

/// One configured campaign with its run directory and worker pool.
pub struct Run {
    cfg: RunConfig,
    hash: String,
    root: PathBuf,
    pool: rayon::ThreadPool,
}

impl Run {
    /// Validates `cfg` and prepares `runs/<hash>/`.
    pub fn new(cfg: RunConfig, workers: usize) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.config_hash();
        let root = cfg.run_dir();
        std::fs::create_dir_all(&root).map_err(Error::io(&root))?;
        let mut stored = cfg.clone();
        stored.output_root = PathBuf::from(".");
        stored.strategies.clear();
        write_atomic(&root.join("config.toml"), stored.to_toml().as_bytes())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        Ok(Self { cfg, hash, root, pool })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn rel(&self, p: &Path) -> String {
        p.strip_prefix(&self.root).unwrap_or(p).to_string_lossy().into_owned()
    }

    fn strategies(&self) -> Result<Vec<Strategy>> {
        self.cfg.parsed_strategies()
    }

    fn kinds(&self) -> Result<Vec<AugmentationKind>> {
        let mut k: Vec<AugmentationKind> = self.strategies()?.iter().flat_map(|s| s.augmentation_kinds()).collect();
        k.sort();
        k.dedup();
        Ok(k)
    }

    /// Lists `audio_dir/<subset>/*.wav` in name order. Tracks without an
    /// annotation file are left out and reported.
    pub fn scan(&self) -> Result<(Vec<SourceTrack>, Vec<ItemFailure>)> {
        let d = &self.cfg.dataset;
        let mut tracks = Vec::new();
        let mut failures = Vec::new();
        for subset in &d.subsets {
            let dir = d.audio_dir.join(subset);
            let mut wavs: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(Error::io(&dir))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
                .collect();
            wavs.sort();
            for audio in wavs {
                let id = file_id(&audio);
                let annotation = d.annotation_dir.join(subset).join(format!("{id}.txt"));
                if annotation.is_file() {
                    tracks.push(SourceTrack { id, subset: subset.clone(), audio, annotation });
                } else {
                    failures
                        .push(ItemFailure { item: id, error: format!("missing annotation {}", annotation.display()) });
                }
            }
        }
        Ok((tracks, failures))
    }

    fn augmented_paths(&self, subset: &str, id: &str) -> (PathBuf, PathBuf) {
        let dir = self.root.join("augmented").join(subset);
        (dir.join(format!("{id}.wav")), dir.join(format!("{id}.txt")))
    }

    fn feature_path(&self, subset: &str, id: &str) -> PathBuf {
        self.root.join("features").join(subset).join(format!("{id}.mcms"))
    }

    fn audio_path(&self, sources: &[SourceTrack], t: &CampaignTrack) -> PathBuf {
        match t.spec {
            None => sources[t.source].audio.clone(),
            Some(_) => self.augmented_paths(&t.info.subset, &t.info.id).0,
        }
    }

    fn annotation_path(&self, sources: &[SourceTrack], t: &CampaignTrack) -> PathBuf {
        match t.spec {
            None => sources[t.source].annotation.clone(),
            Some(_) => self.augmented_paths(&t.info.subset, &t.info.id).1,
        }
    }

    /// Originals followed by their derivatives of `kinds`.
    fn campaign_tracks(&self, sources: &[SourceTrack], kinds: &[AugmentationKind]) -> Vec<CampaignTrack> {
        let mut out: Vec<CampaignTrack> = sources
            .iter()
            .enumerate()
            .map(|(i, s)| CampaignTrack { info: TrackInfo::original(&s.id, &s.subset), source: i, spec: None })
            .collect();
        for (i, s) in sources.iter().enumerate() {
            let parent = TrackInfo::original(&s.id, &s.subset);
            for &k in kinds {
                for spec in self.cfg.grid.specs(k) {
                    out.push(CampaignTrack {
                        info: TrackInfo::derived(derived_id(&s.id, &spec), &parent, k),
                        source: i,
                        spec: Some(spec),
                    });
                }
            }
        }
        out
    }

    fn write_stage_manifest(&self, dir: &str, summary: &StageSummary, inputs: &[String], t0: Instant) -> Result<()> {
        let m = StageManifest {
            config_hash: &self.hash,
            tool_version: TOOL_VERSION,
            stage: &summary.stage,
            inputs,
            outputs: &summary.outputs,
            failures: &summary.failures,
            timings: Timings { seconds: t0.elapsed().as_secs_f64() },
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write_atomic(&self.root.join(dir).join("manifest.json"), text.as_bytes())
    }

    /// Writes every augmentation the configured strategies need, plus one
    /// item manifest per strategy.
    pub fn augment(&self) -> Result<StageSummary> {
        let t0 = Instant::now();
        let (sources, mut failures) = self.scan()?;
        let kinds = self.kinds()?;
        let index_path = self.root.join("augmented/index.tsv");
        let mut index = Index::load(&index_path);
        let tracks: Vec<CampaignTrack> =
            self.campaign_tracks(&sources, &kinds).into_iter().filter(|t| t.spec.is_some()).collect();

        // digests of the sources that feed at least one derivative
        let used: Vec<bool> = (0..sources.len()).map(|i| tracks.iter().any(|t| t.source == i)).collect();
        let source_digests: Vec<Option<String>> = self.pool.install(|| {
            sources
                .par_iter()
                .zip(&used)
                .map(|(s, &u)| {
                    if !u {
                        return None;
                    }
                    Some(hex_digest_parts(&[&read(&s.audio).ok()?, &read(&s.annotation).ok()?]))
                })
                .collect()
        });

        let mut reused = 0;
        let mut pending = Vec::new();
        for (n, t) in tracks.iter().enumerate() {
            let Some(src) = &source_digests[t.source] else { continue };
            let spec = t.spec.expect("derived");
            let digest =
                hex_digest(format!("{src}\t{}\t{TOOL_VERSION}", serde_json::to_string(&spec).unwrap()).as_bytes());
            let (wav, txt) = self.augmented_paths(&t.info.subset, &t.info.id);
            let key = self.rel(&wav);
            if index.0.get(&key) == Some(&digest) && wav.is_file() && txt.is_file() {
                reused += 1;
            } else {
                pending.push((n, key, digest));
            }
        }
        for (i, d) in source_digests.iter().enumerate() {
            if used[i] && d.is_none() {
                failures.push(ItemFailure {
                    item: sources[i].id.clone(),
                    error: "source audio or annotation unreadable".into(),
                });
            }
        }

        let results: Vec<std::result::Result<(), String>> = self.pool.install(|| {
            pending
                .par_iter()
                .map(|(n, _, _)| {
                    let t = &tracks[*n];
                    let s = &sources[t.source];
                    let run = || -> Result<()> {
                        let source =
                            SourceItem { clip: load_audio(&s.audio)?, annotations: read_annotation(&s.annotation)? };
                        let item = augment_item(&source, &t.spec.expect("derived"))?;
                        let (wav, txt) = self.augmented_paths(&t.info.subset, &t.info.id);
                        write_wav(&wav, &item.clip)?;
                        write_annotation(&txt, &item.annotations)
                    };
                    run().map_err(|e| e.to_string())
                })
                .collect()
        });
        for ((n, key, digest), r) in pending.into_iter().zip(results) {
            match r {
                Ok(()) => {
                    index.0.insert(key, digest);
                }
                Err(error) => {
                    index.0.remove(&key);
                    failures.push(ItemFailure { item: tracks[n].info.id.clone(), error });
                }
            }
        }
        index.save(&index_path)?;

        let failed: std::collections::BTreeSet<&str> = failures.iter().map(|f| f.item.as_str()).collect();
        let mut outputs = Vec::new();
        for strategy in self.strategies()? {
            let mut text =
                String::from("output\tparent_id\tkind\tfactor\tcents\tenvelope_cents\tcompensate\tannotation\n");
            let ks = strategy.augmentation_kinds();
            for t in tracks.iter().filter(|t| ks.contains(&t.info.kind.expect("derived"))) {
                if failed.contains(t.info.id.as_str()) || source_digests[t.source].is_none() {
                    continue;
                }
                let (wav, txt) = self.augmented_paths(&t.info.subset, &t.info.id);
                let (factor, cents, te, comp) = match t.spec.expect("derived") {
                    AugmentationSpec::RemixNoise { factor } | AugmentationSpec::RemixAttacks { factor } => {
                        (factor.to_string(), String::new(), String::new(), String::new())
                    }
                    AugmentationSpec::Transpose { cents, envelope_cents, compensate } => {
                        (String::new(), cents.to_string(), envelope_cents.to_string(), compensate.to_string())
                    }
                };
                text.push_str(&format!(
                    "{}\t{}\t{}\t{factor}\t{cents}\t{te}\t{comp}\t{}\n",
                    self.rel(&wav),
                    sources[t.source].id,
                    t.info.kind.expect("derived").label(),
                    self.rel(&txt)
                ));
                outputs.push(self.rel(&wav));
                outputs.push(self.rel(&txt));
            }
            let path = self.root.join("augmented").join(format!("{}.tsv", strategy_slug(&strategy)));
            write_atomic(&path, text.as_bytes())?;
            outputs.push(self.rel(&path));
        }
        outputs.sort();
        outputs.dedup();
        let summary = StageSummary { stage: "augment".into(), outputs, reused, failures };
        let inputs = source_inputs(&sources);
        self.write_stage_manifest("augmented", &summary, &inputs, t0)?;
        Ok(summary)
    }

    /// Computes the feature cache of every original and of every derivative
    /// the configured strategies train on.
    pub fn features(&self) -> Result<StageSummary> {
        let t0 = Instant::now();
        let (sources, mut failures) = self.scan()?;
        let tracks = self.campaign_tracks(&sources, &self.kinds()?);
        let index_path = self.root.join("features/index.tsv");
        let mut index = Index::load(&index_path);
        let fcfg = serde_json::to_string(&self.cfg.features).expect("features config serializes");

        let results: Vec<std::result::Result<(String, String, bool), String>> = self.pool.install(|| {
            tracks
                .par_iter()
                .map(|t| {
                    let audio = self.audio_path(&sources, t);
                    let out = self.feature_path(&t.info.subset, &t.info.id);
                    let key = self.rel(&out);
                    let bytes = read(&audio).map_err(|e| match t.spec {
                        Some(_) => format!("{e} (run augment first)"),
                        None => e.to_string(),
                    })?;
                    let digest = hex_digest_parts(&[&bytes, fcfg.as_bytes(), TOOL_VERSION.as_bytes()]);
                    if index.0.get(&key) == Some(&digest) && out.is_file() {
                        return Ok((key, digest, true));
                    }
                    let clip = decode_wav(&bytes, &t.info.id, &audio).map_err(|e| e.to_string())?;
                    let feats = compute_mcms(&clip, &self.cfg.features).map_err(|e| e.to_string())?;
                    write_features(&out, &feats).map_err(|e| e.to_string())?;
                    Ok((key, digest, false))
                })
                .collect()
        });
        let mut reused = 0;
        let mut outputs = Vec::new();
        for (t, r) in tracks.iter().zip(results) {
            match r {
                Ok((key, digest, was_reused)) => {
                    reused += usize::from(was_reused);
                    index.0.insert(key.clone(), digest);
                    outputs.push(key);
                }
                Err(error) => failures.push(ItemFailure { item: t.info.id.clone(), error }),
            }
        }
        index.save(&index_path)?;
        outputs.sort();
        let inputs: Vec<String> =
            tracks.iter().map(|t| self.audio_path(&sources, t).to_string_lossy().into_owned()).collect();
        let summary = StageSummary { stage: "features".into(), outputs, reused, failures };
        self.write_stage_manifest("features", &summary, &inputs, t0)?;
        Ok(summary)
    }

    fn plan_for(&self, sources: &[SourceTrack], strategy: &Strategy) -> Result<(Vec<CampaignTrack>, CrossValPlan)> {
        let tracks = self.campaign_tracks(sources, &strategy.augmentation_kinds());
        let infos: Vec<TrackInfo> = tracks.iter().map(|t| t.info.clone()).collect();
        let plan = CrossValPlan::build(&infos, strategy, self.cfg.validation_fraction, self.cfg.split_seed)?;
        plan.validate()?;
        Ok((tracks, plan))
    }

    /// Reads features and annotations of the tracks flagged in `wanted`.
    fn load_data(&self, sources: &[SourceTrack], tracks: &[CampaignTrack], wanted: &[bool]) -> Result<LoadedData> {
        let hop = self.cfg.features.hop_seconds;
        let bands = self.cfg.features.n_mels;
        let items = self.pool.install(|| {
            tracks
                .par_iter()
                .zip(wanted)
                .map(|(t, &w)| {
                    if !w {
                        return Ok((
                            McmsTensor::from_raw(Vec::new(), 0, bands, hop, &t.info.id)?,
                            OnsetAnnotation::default(),
                        ));
                    }
                    let f = self.feature_path(&t.info.subset, &t.info.id);
                    if !f.is_file() {
                        return Err(Error::format(&f, "missing feature file (run features first)"));
                    }
                    Ok((read_features(&f)?, read_annotation(&self.annotation_path(sources, t))?))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(LoadedData { items })
    }

    /// Digest of the features and labels a plan trains on.
    fn data_digest(&self, sources: &[SourceTrack], tracks: &[CampaignTrack], plan: &CrossValPlan) -> Result<String> {
        let index = Index::load(&self.root.join("features/index.tsv"));
        let mut text = String::new();
        for t in tracks.iter().take(plan.tracks.len()) {
            let key = self.rel(&self.feature_path(&t.info.subset, &t.info.id));
            let ann = hex_digest(&read(&self.annotation_path(sources, t)).unwrap_or_default());
            text.push_str(&format!("{}\t{}\t{ann}\n", t.info.id, index.0.get(&key).map_or("", String::as_str)));
        }
        Ok(hex_digest(text.as_bytes()))
    }

    fn checkpoint_path(&self, strategy: &Strategy, plan: &CrossValPlan, job: &CrossValJob) -> PathBuf {
        self.root
            .join("checkpoints")
            .join(strategy_slug(strategy))
            .join(format!("{}_s{}_{}.ckpt", plan.folds[job.fold].test_subset, job.seed, job.instrument))
    }

    /// Trains one detector per (fold, seed, instrument) for every strategy.
    pub fn train(&self) -> Result<StageSummary> {
        let t0 = Instant::now();
        let (sources, mut failures) = self.scan()?;
        let mut outputs = Vec::new();
        let mut inputs = Vec::new();
        let mut reused = 0;
        for strategy in self.strategies()? {
            let (tracks, plan) = self.plan_for(&sources, &strategy)?;
            let digest = self.data_digest(&sources, &tracks, &plan)?;
            let cfg = strategy.train_config(&self.cfg.train);
            let jobs = plan.jobs(&self.cfg.seeds);
            let mut pending = Vec::new();
            for job in &jobs {
                let path = self.checkpoint_path(&strategy, &plan, job);
                let job_digest = hex_digest(format!("{digest}\t{strategy}\t{job:?}\t{}", self.hash).as_bytes());
                let current =
                    path.is_file() && load_checkpoint(&path).is_ok_and(|c| c.meta.get("inputs") == Some(&job_digest));
                if current {
                    reused += 1;
                } else {
                    pending.push((*job, path.clone(), job_digest));
                }
                outputs.push(self.rel(&path));
                outputs.push(self.rel(&path.with_extension("log")));
            }
            inputs.extend(tracks.iter().map(|t| self.rel(&self.feature_path(&t.info.subset, &t.info.id))));
            if pending.is_empty() {
                continue;
            }
            let all = vec![true; tracks.len()];
            let loaded = self.load_data(&sources, &tracks, &all)?;
            let data = loaded.views();
            let results: Vec<Result<()>> = self.pool.install(|| {
                pending
                    .par_iter()
                    .map(|(job, path, job_digest)| {
                        let out = train_job(&plan, &data, *job, self.cfg.model, &cfg, &self.cfg.eval)?;
                        let params = quantize(&out.params);
                        let fold = &plan.folds[job.fold];
                        let (threshold, _) =
                            validation_score(&params, &data, &fold.validation, job.instrument, &self.cfg.eval)?;
                        let meta = BTreeMap::from([
                            ("strategy".to_string(), strategy.to_string()),
                            ("fold".to_string(), job.fold.to_string()),
                            ("test_subset".to_string(), fold.test_subset.clone()),
                            ("campaign_seed".to_string(), job.seed.to_string()),
                            ("instrument".to_string(), job.instrument.to_string()),
                            ("threshold".to_string(), threshold.to_string()),
                            ("best_epoch".to_string(), out.log.best_epoch.to_string()),
                            ("inputs".to_string(), job_digest.clone()),
                        ]);
                        write_atomic(
                            &path.with_extension("log"),
                            format_training_log(job.instrument, &out.log).as_bytes(),
                        )?;
                        save_checkpoint(path, &Checkpoint { params, meta })
                    })
                    .collect()
            });
            for ((job, path, _), r) in pending.iter().zip(results) {
                if let Err(e) = r {
                    failures.push(ItemFailure { item: self.rel(path), error: format!("{job:?}: {e}") });
                }
            }
        }
        inputs.sort();
        inputs.dedup();
        let summary = StageSummary { stage: "train".into(), outputs, reused, failures };
        self.write_stage_manifest("checkpoints", &summary, &inputs, t0)?;
        Ok(summary)
    }

    /// Scores every checkpoint on its fold's held-out subset and writes the
    /// report. Missing checkpoints are reported per cell.
    pub fn evaluate(&self) -> Result<(Report, StageSummary)> {
        let t0 = Instant::now();
        let (sources, mut failures) = self.scan()?;
        let mut rows = Vec::new();
        let mut inputs = Vec::new();
        for strategy in self.strategies()? {
            let (tracks, plan) = self.plan_for(&sources, &strategy)?;
            let jobs = plan.jobs(&self.cfg.seeds);
            let mut found = Vec::new();
            for job in &jobs {
                let path = self.checkpoint_path(&strategy, &plan, job);
                if !path.is_file() {
                    failures.push(ItemFailure { item: self.rel(&path), error: "missing checkpoint".into() });
                    continue;
                }
                inputs.push(self.rel(&path));
                found.push((*job, path));
            }
            if found.is_empty() {
                continue;
            }
            let mut wanted = vec![false; tracks.len()];
            for (job, _) in &found {
                for &i in &plan.folds[job.fold].test {
                    wanted[i] = true;
                }
            }
            let loaded = self.load_data(&sources, &tracks, &wanted)?;
            let data = loaded.views();
            let results: Vec<Result<ReportJob>> = self.pool.install(|| {
                found
                    .par_iter()
                    .map(|(job, path)| {
                        let ck = load_checkpoint(path)?;
                        let threshold =
                            ck.threshold().ok_or_else(|| Error::format(path, "checkpoint has no threshold"))?;
                        let counts: MatchCounts = test_counts(
                            &ck.params,
                            &data,
                            &plan.folds[job.fold].test,
                            job.instrument,
                            threshold,
                            &self.cfg.eval,
                        )?;
                        Ok(ReportJob {
                            test_subset: plan.folds[job.fold].test_subset.clone(),
                            seed: job.seed,
                            instrument: job.instrument,
                            threshold,
                            counts,
                            scores: compute_metrics(counts),
                            job: *job,
                        })
                    })
                    .collect()
            });
            let mut done = Vec::new();
            for ((_, path), r) in found.iter().zip(results) {
                match r {
                    Ok(j) => done.push(j),
                    Err(e) => failures.push(ItemFailure { item: self.rel(path), error: e.to_string() }),
                }
            }
            if done.is_empty() {
                continue;
            }
            let pairs: Vec<(CrossValJob, Scores)> = done.iter().map(|j| (j.job, j.scores)).collect();
            let summary: StrategyReport = aggregate(strategy.label(), &plan, &pairs);
            rows.push(ReportRow { strategy: strategy.to_string(), report: summary, jobs: done });
        }
        if rows.is_empty() {
            failures.push(ItemFailure { item: "report".into(), error: "no checkpoints found".into() });
        }
        let report = Report { config_hash: self.hash.clone(), tool_version: TOOL_VERSION.into(), rows };
        let dir = self.root.join("reports");
        write_atomic(&dir.join("report.tsv"), format_report_tsv(&report).as_bytes())?;
        write_atomic(
            &dir.join("report.json"),
            serde_json::to_string_pretty(&report).expect("report serializes").as_bytes(),
        )?;
        let summary = StageSummary {
            stage: "evaluate".into(),
            outputs: vec!["reports/report.json".into(), "reports/report.tsv".into()],
            reused: 0,
            failures,
        };
        self.write_stage_manifest("reports", &summary, &inputs, t0)?;
        Ok((report, summary))
    }

    /// augment, features, train and evaluate in order. A stage that fails
    /// outright stops the chain; item failures do not.
    pub fn crossval(&self) -> Result<(Report, Vec<StageSummary>)> {
        let mut stages = vec![self.augment()?, self.features()?, self.train()?];
        let (report, eval) = self.evaluate()?;
        stages.push(eval);
        Ok((report, stages))
    }
}

fn source_inputs(sources: &[SourceTrack]) -> Vec<String> {
    sources
        .iter()
        .flat_map(|s| [s.audio.to_string_lossy().into_owned(), s.annotation.to_string_lossy().into_owned()])
        .collect()
}

/// Detections of one clip from per-instrument checkpoints, each at its
/// stored threshold (0.5 when absent).
pub fn transcribe(
    checkpoints: &[Checkpoint],
    clip: &AudioClip,
    features: &McmsConfig,
    min_gap: f64,
) -> Result<DetectionList> {
    let feats = compute_mcms(clip, features)?;
    let mut lists = Vec::new();
    for ck in checkpoints {
        let inst: Instrument = ck.instrument().ok_or_else(|| Error::Config("checkpoint names no instrument".into()))?;
        let curve = predict_curve(&ck.params, &feats)?;
        lists.push(pick_peaks(&curve, inst, ck.threshold().unwrap_or(0.5), min_gap));
    }
    Ok(DetectionList::merge(lists))
}
