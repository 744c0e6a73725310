use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::peaks::{pick_peaks, select_threshold, threshold_grid, ScoredCurve, DEFAULT_MIN_GAP};
use super::{
    compute_metrics, match_times, Instrument, MatchCounts, OnsetAnnotation, Scores, Strategy, DEFAULT_TOLERANCE,
};
use crate::augment::AugmentationKind;
use crate::error::{Error, Result};
use crate::features::McmsTensor;
use crate::model::{
    frame_targets, predict_curve, train, ActivationCurve, ModelParams, Topology, TrainConfig, TrainOutcome,
    TrainingLog, TrainingSequence,
};

/// Default share of training originals held out for early stopping.
pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.15;

/// Identity of one track in a cross-validation campaign.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackInfo {
    pub id: String,
    /// Source database, e.g. `2005` or `RBMA`.
    pub subset: String,
    /// Track this one was augmented from (`None` for originals).
    pub parent_id: Option<String>,
    pub kind: Option<AugmentationKind>,
}

impl TrackInfo {
    pub fn original(id: impl Into<String>, subset: impl Into<String>) -> Self {
        Self { id: id.into(), subset: subset.into(), parent_id: None, kind: None }
    }

    pub fn derived(id: impl Into<String>, parent: &TrackInfo, kind: AugmentationKind) -> Self {
        Self { id: id.into(), subset: parent.subset.clone(), parent_id: Some(parent.id.clone()), kind: Some(kind) }
    }

    pub fn is_original(&self) -> bool {
        self.parent_id.is_none()
    }

    /// The original this track descends from (itself for an original).
    pub fn root_id(&self) -> &str {
        self.parent_id.as_deref().unwrap_or(&self.id)
    }
}

/// One cross-database step: train on the other subsets, test on one.
/// Members are indices into [`CrossValPlan::tracks`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub test_subset: String,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossValPlan {
    pub tracks: Vec<TrackInfo>,
    pub folds: Vec<Fold>,
}

impl CrossValPlan {
    /// One fold per subset. Validation tracks are drawn from the training
    /// originals of every other subset (the `validation_fraction` share of
    /// each, rounded, at least one while a subset has two or more), using
    /// only originals and `split_seed`, so the choice does not depend on
    /// which augmentations exist. Training takes the remaining originals and
    /// those of their derivatives that `strategy` admits.
    pub fn build(tracks: &[TrackInfo], strategy: &Strategy, validation_fraction: f64, split_seed: u64) -> Result<Self> {
        if !(0.0..1.0).contains(&validation_fraction) {
            return Err(Error::InvalidTrainConfig(format!("validation fraction {validation_fraction} outside [0, 1)")));
        }
        let mut by_subset: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, t) in tracks.iter().enumerate().filter(|(_, t)| t.is_original()) {
            by_subset.entry(t.subset.as_str()).or_default().push(i);
        }
        if by_subset.len() < 2 {
            return Err(Error::EmptyDataset(format!(
                "cross-database validation needs two subsets, found {}",
                by_subset.len()
            )));
        }
        let mut held: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (k, (subset, members)) in by_subset.iter().enumerate() {
            let mut m = members.clone();
            m.sort_by(|&a, &b| tracks[a].id.cmp(&tracks[b].id));
            let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
            rng.set_stream(k as u64);
            m.shuffle(&mut rng);
            let n = m.len();
            let mut count = libm::round(validation_fraction * n as f64) as usize;
            if n >= 2 && validation_fraction > 0.0 {
                count = count.clamp(1, n - 1);
            } else {
                count = 0;
            }
            m.truncate(count);
            m.sort_unstable();
            held.insert(subset, m);
        }

        let mut folds = Vec::new();
        for (&test_subset, members) in &by_subset {
            let validation: Vec<usize> =
                held.iter().filter(|(s, _)| **s != test_subset).flat_map(|(_, v)| v.iter().copied()).collect();
            let val_ids: BTreeSet<&str> = validation.iter().map(|&i| tracks[i].id.as_str()).collect();
            let train = tracks
                .iter()
                .enumerate()
                .filter(|(_, t)| t.subset != test_subset && !val_ids.contains(t.root_id()) && strategy.admits(t.kind))
                .map(|(i, _)| i)
                .collect();
            folds.push(Fold { test_subset: test_subset.into(), train, validation, test: members.clone() });
        }
        let plan = Self { tracks: tracks.to_vec(), folds };
        plan.validate()?;
        Ok(plan)
    }

    /// Checks fold hygiene: tests are held-out originals; nothing in training
    /// or validation comes from the test subset or descends from a test
    /// track; nothing in training descends from a validation track; every
    /// derivative's parent exists in the same subset.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Hygiene(m));
        let by_id: BTreeMap<&str, &TrackInfo> = self.tracks.iter().map(|t| (t.id.as_str(), t)).collect();
        if by_id.len() != self.tracks.len() {
            return bad("duplicate track ids".into());
        }
        for t in &self.tracks {
            if let Some(p) = &t.parent_id {
                match by_id.get(p.as_str()) {
                    None => return bad(format!("{} derives from unknown track {p}", t.id)),
                    Some(parent) if !parent.is_original() => {
                        return bad(format!("{} derives from derived track {p}", t.id))
                    }
                    Some(parent) if parent.subset != t.subset => {
                        return bad(format!(
                            "{} is in subset {} but its parent is in {}",
                            t.id, t.subset, parent.subset
                        ))
                    }
                    _ => {}
                }
            }
        }
        let n = self.tracks.len();
        for fold in &self.folds {
            let fs = &fold.test_subset;
            if let Some(&i) = fold.train.iter().chain(&fold.validation).chain(&fold.test).find(|&&i| i >= n) {
                return bad(format!("fold {fs}: track index {i} out of range"));
            }
            if fold.test.is_empty() {
                return bad(format!("fold {fs}: no test tracks"));
            }
            let test_roots: BTreeSet<&str> = fold.test.iter().map(|&i| self.tracks[i].id.as_str()).collect();
            let val_roots: BTreeSet<&str> = fold.validation.iter().map(|&i| self.tracks[i].id.as_str()).collect();
            for &i in &fold.test {
                let t = &self.tracks[i];
                if !t.is_original() || &t.subset != fs {
                    return bad(format!("fold {fs}: test track {} is not an original of the held-out subset", t.id));
                }
            }
            for &i in &fold.validation {
                let t = &self.tracks[i];
                if !t.is_original() || &t.subset == fs {
                    return bad(format!("fold {fs}: validation track {} is not a training original", t.id));
                }
            }
            for &i in &fold.train {
                let t = &self.tracks[i];
                if &t.subset == fs || test_roots.contains(t.root_id()) {
                    return bad(format!("fold {fs}: training track {} comes from the test subset", t.id));
                }
                if val_roots.contains(t.root_id()) {
                    return bad(format!(
                        "fold {fs}: training track {} is or derives from validation track {}",
                        t.id,
                        t.root_id()
                    ));
                }
            }
            if fold.train.is_empty() {
                return bad(format!("fold {fs}: empty training set"));
            }
        }
        Ok(())
    }

    /// Training runs of a campaign in execution order: fold, seed, instrument.
    pub fn jobs(&self, seeds: &[u64]) -> Vec<CrossValJob> {
        let mut jobs = Vec::new();
        for fold in 0..self.folds.len() {
            for &seed in seeds {
                for instrument in Instrument::ALL {
                    jobs.push(CrossValJob { fold, seed, instrument });
                }
            }
        }
        jobs
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrossValJob {
    pub fold: usize,
    pub seed: u64,
    pub instrument: Instrument,
}

impl CrossValJob {
    /// Seed of the network initialization and sampling of this job.
    pub fn training_seed(&self) -> u64 {
        let mut z = self.seed ^ ((self.fold as u64) << 32) ^ ((self.instrument.index() as u64) << 48);
        // splitmix64 finalizer
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// Features and ground truth of one track, aligned with the plan's tracks.
#[derive(Debug, Clone, Copy)]
pub struct TrackData<'a> {
    pub features: &'a McmsTensor,
    pub annotation: &'a OnsetAnnotation,
}

/// Peak picking and matching settings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EvalConfig {
    pub tolerance: f64,
    pub min_gap: f64,
    pub thresholds: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { tolerance: DEFAULT_TOLERANCE, min_gap: DEFAULT_MIN_GAP, thresholds: threshold_grid() }
    }
}

/// Result of one training run.
#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub job: CrossValJob,
    pub params: ModelParams,
    pub log: TrainingLog,
    /// Peak-picking threshold chosen on validation.
    pub threshold: f64,
    /// Counts pooled over the fold's test tracks.
    pub counts: MatchCounts,
    pub scores: Scores,
}

fn curves_with_truths(
    params: &ModelParams,
    data: &[TrackData<'_>],
    members: &[usize],
    instrument: Instrument,
) -> Result<(Vec<ActivationCurve>, Vec<Vec<f64>>)> {
    let mut curves = Vec::with_capacity(members.len());
    let mut truths = Vec::with_capacity(members.len());
    for &i in members {
        curves.push(predict_curve(params, data[i].features)?);
        truths.push(data[i].annotation.times(instrument));
    }
    Ok((curves, truths))
}

fn scored<'a>(curves: &'a [ActivationCurve], truths: &'a [Vec<f64>]) -> Vec<ScoredCurve<'a>> {
    curves.iter().zip(truths).map(|(curve, t)| ScoredCurve { curve, truths: t }).collect()
}

/// Validation F-measure of `params` at its best threshold.
pub fn validation_score(
    params: &ModelParams,
    data: &[TrackData<'_>],
    validation: &[usize],
    instrument: Instrument,
    eval: &EvalConfig,
) -> Result<(f64, MatchCounts)> {
    let (curves, truths) = curves_with_truths(params, data, validation, instrument)?;
    let (t, counts) = select_threshold(&scored(&curves, &truths), &eval.thresholds, eval.min_gap, eval.tolerance);
    Ok((t, counts))
}

/// Trains the detector of one (fold, seed, instrument), early-stopping on
/// validation F, then evaluates it on the fold's test tracks at the
/// threshold chosen on validation.
pub fn run_job(
    plan: &CrossValPlan,
    data: &[TrackData<'_>],
    job: CrossValJob,
    topology: Topology,
    cfg: &TrainConfig,
    eval: &EvalConfig,
) -> Result<JobOutcome> {
    let outcome = train_job(plan, data, job, topology, cfg, eval)?;
    let fold = &plan.folds[job.fold];
    let (threshold, _) = validation_score(&outcome.params, data, &fold.validation, job.instrument, eval)?;
    let counts = test_counts(&outcome.params, data, &fold.test, job.instrument, threshold, eval)?;
    Ok(JobOutcome { job, params: outcome.params, log: outcome.log, threshold, counts, scores: compute_metrics(counts) })
}

/// Trains the network of one job, early-stopped on its fold's validation tracks.
pub fn train_job(
    plan: &CrossValPlan,
    data: &[TrackData<'_>],
    job: CrossValJob,
    topology: Topology,
    cfg: &TrainConfig,
    eval: &EvalConfig,
) -> Result<TrainOutcome> {
    if data.len() != plan.tracks.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} tracks of data", plan.tracks.len()),
            got: format!("{}", data.len()),
        });
    }
    let fold = plan.folds.get(job.fold).ok_or_else(|| Error::Hygiene(format!("no fold {}", job.fold)))?;
    if fold.validation.is_empty() {
        return Err(Error::EmptyDataset(format!("fold {} has no validation tracks", fold.test_subset)));
    }
    let inst = job.instrument;
    let seqs: Vec<TrainingSequence<'_>> = fold
        .train
        .iter()
        .map(|&i| {
            let f = data[i].features;
            TrainingSequence {
                features: f,
                targets: frame_targets(
                    f.n_frames(),
                    f.hop_seconds(),
                    &data[i].annotation.times(inst),
                    cfg.target_radius,
                ),
            }
        })
        .collect();
    let mut validate = |p: &ModelParams| -> Result<f64> {
        let (_, counts) = validation_score(p, data, &fold.validation, inst, eval)?;
        Ok(compute_metrics(counts).f_measure)
    };
    train(topology, &seqs, &mut validate, cfg, job.training_seed())
}

/// Pooled counts of one instrument over `tracks` at a fixed threshold.
pub fn test_counts(
    params: &ModelParams,
    data: &[TrackData<'_>],
    tracks: &[usize],
    inst: Instrument,
    threshold: f64,
    eval: &EvalConfig,
) -> Result<MatchCounts> {
    let mut counts = MatchCounts::default();
    for &i in tracks {
        let curve = predict_curve(params, data[i].features)?;
        let det = pick_peaks(&curve, inst, threshold, eval.min_gap).times(inst);
        counts += match_times(&det, &data[i].annotation.times(inst), eval.tolerance);
    }
    Ok(counts)
}

/// Mean scores of one strategy.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StrategyReport {
    pub label: String,
    /// Indexed by [`Instrument::index`].
    pub scores: [Scores; 3],
    /// Per fold and instrument, the mean over seeds.
    pub fold_scores: Vec<(String, [Scores; 3])>,
    pub runs: usize,
}

impl StrategyReport {
    pub fn get(&self, inst: Instrument) -> Scores {
        self.scores[inst.index()]
    }
}

/// Averages job scores over seeds within each fold, then over folds with
/// equal weight.
pub fn aggregate(label: impl Into<String>, plan: &CrossValPlan, outcomes: &[(CrossValJob, Scores)]) -> StrategyReport {
    let mut fold_scores = Vec::new();
    for (k, fold) in plan.folds.iter().enumerate() {
        let per = Instrument::ALL.map(|inst| {
            Scores::mean(outcomes.iter().filter(|(j, _)| j.fold == k && j.instrument == inst).map(|(_, s)| s))
        });
        if outcomes.iter().any(|(j, _)| j.fold == k) {
            fold_scores.push((fold.test_subset.clone(), per));
        }
    }
    let scores = Instrument::ALL.map(|inst| Scores::mean(fold_scores.iter().map(|(_, s)| &s[inst.index()])));
    StrategyReport { label: label.into(), scores, fold_scores, runs: outcomes.len() }
}

/// Runs every job of a campaign in order on the current thread.
pub fn run_crossval(
    plan: &CrossValPlan,
    data: &[TrackData<'_>],
    strategy: &Strategy,
    seeds: &[u64],
    topology: Topology,
    base: &TrainConfig,
    eval: &EvalConfig,
) -> Result<(StrategyReport, Vec<JobOutcome>)> {
    plan.validate()?;
    let cfg = strategy.train_config(base);
    let outcomes = plan
        .jobs(seeds)
        .into_iter()
        .map(|job| run_job(plan, data, job, topology, &cfg, eval))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(CrossValJob, Scores)> = outcomes.iter().map(|o| (o.job, o.scores)).collect();
    Ok((aggregate(strategy.label(), plan, &pairs), outcomes))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn dataset() -> Vec<TrackInfo> {
        let mut v = Vec::new();
        for s in ["2005", "GEN", "MEDLEY", "RBMA"] {
            for i in 0..10 {
                let o = TrackInfo::original(format!("{s}_{i}"), s);
                v.push(TrackInfo::derived(format!("{s}_{i}__rn"), &o, AugmentationKind::RemixNoise));
                v.push(TrackInfo::derived(format!("{s}_{i}__tnc"), &o, AugmentationKind::TransposeUncompensated));
                v.push(o);
            }
        }
        v
    }

    #[test]
    fn plan_shape_and_job_count() {
        let tracks = dataset();
        let plan = CrossValPlan::build(&tracks, &Strategy::Original, 0.15, 1).unwrap();
        assert_eq!(plan.folds.len(), 4);
        for f in &plan.folds {
            assert_eq!(f.test.len(), 10);
            assert_eq!(f.validation.len(), 6);
            assert_eq!(f.train.len(), 24);
        }
        assert_eq!(plan.jobs(&[1, 2, 3]).len(), 36);
    }

    #[test]
    fn augmentation_changes_only_training() {
        let tracks = dataset();
        let a = CrossValPlan::build(&tracks, &Strategy::Original, 0.15, 1).unwrap();
        let b = CrossValPlan::build(&tracks, &Strategy::Augment(AugmentationKind::TransposeUncompensated), 0.15, 1)
            .unwrap();
        for (fa, fb) in a.folds.iter().zip(&b.folds) {
            assert_eq!(fa.validation, fb.validation);
            assert_eq!(fa.test, fb.test);
            assert_eq!(fb.train.len(), 2 * fa.train.len());
        }
    }

    #[test]
    fn leaked_derivative_is_rejected() {
        let tracks = dataset();
        let mut plan = CrossValPlan::build(&tracks, &Strategy::All, 0.15, 1).unwrap();
        let fold = &plan.folds[0];
        let test_id = plan.tracks[fold.test[0]].id.clone();
        let leak = plan.tracks.iter().position(|t| t.parent_id.as_deref() == Some(test_id.as_str())).unwrap();
        plan.folds[0].train.push(leak);
        assert!(matches!(plan.validate(), Err(Error::Hygiene(_))));

        let mut plan = CrossValPlan::build(&tracks, &Strategy::All, 0.15, 1).unwrap();
        let val_id = plan.tracks[plan.folds[1].validation[0]].id.clone();
        let leak = plan.tracks.iter().position(|t| t.parent_id.as_deref() == Some(val_id.as_str())).unwrap();
        plan.folds[1].train.push(leak);
        assert!(matches!(plan.validate(), Err(Error::Hygiene(_))));
    }

    #[test]
    fn equal_fold_weighting() {
        let tracks = dataset();
        let plan = CrossValPlan::build(&tracks, &Strategy::Original, 0.15, 1).unwrap();
        let s = |f| Scores { recall: f, precision: f, f_measure: f };
        let mut outcomes = vec![];
        for fold in 0..4 {
            for seed in [1, 2] {
                for instrument in Instrument::ALL {
                    let v = if fold == 0 { 1.0 } else { 0.0 } + if seed == 2 { 0.2 } else { 0.0 };
                    outcomes.push((CrossValJob { fold, seed, instrument }, s(v)));
                }
            }
        }
        let r = aggregate("Orig.", &plan, &outcomes);
        assert!((r.get(Instrument::Sd).f_measure - 0.35).abs() < 1e-12);
        assert_eq!(r.fold_scores.len(), 4);
    }

    #[test]
    fn job_seeds_differ() {
        let a = CrossValJob { fold: 0, seed: 1, instrument: Instrument::Bd };
        let b = CrossValJob { instrument: Instrument::Sd, ..a };
        let c = CrossValJob { fold: 1, ..a };
        assert_ne!(a.training_seed(), b.training_seed());
        assert_ne!(a.training_seed(), c.training_seed());
    }
}
