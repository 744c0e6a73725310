use drumaug_core::augment::{augment_item, AugmentationKind, AugmentationSpec, SourceItem};
use drumaug_core::eval::OnsetAnnotation;
use drumaug_core::eval::{run_crossval, CrossValPlan, EvalConfig, Strategy, TrackData, TrackInfo};
use drumaug_core::features::{compute_mcms, McmsConfig, McmsTensor};
use drumaug_core::model::{Topology, TrainConfig};
use drumaug_core::synth::{synth_dataset, SynthConfig, SUBSETS};
use drumaug_core::Error;

struct Corpus {
    tracks: Vec<TrackInfo>,
    features: Vec<McmsTensor>,
    annotations: Vec<OnsetAnnotation>,
}

impl Corpus {
    fn data(&self) -> Vec<TrackData<'_>> {
        self.features
            .iter()
            .zip(&self.annotations)
            .map(|(features, annotation)| TrackData { features, annotation })
            .collect()
    }
}

/// Four subsets of three short tracks, 12-band features for the small stack,
/// plus one uncompensated transposition of every track.
fn corpus() -> Corpus {
    let ds = synth_dataset(&SynthConfig { duration: 3.0, ..SynthConfig::default() }, &SUBSETS, 3).unwrap();
    let fcfg = McmsConfig { n_mels: 12, ..McmsConfig::default() };
    let mut c = Corpus { tracks: vec![], features: vec![], annotations: vec![] };
    let spec = AugmentationSpec::Transpose { cents: 100.0, envelope_cents: 0.0, compensate: false };
    for t in &ds {
        let info = TrackInfo::original(t.clip.id(), t.subset.clone());
        let aug = augment_item(&SourceItem { clip: t.clip.clone(), annotations: t.annotation.clone() }, &spec).unwrap();
        c.tracks.push(TrackInfo::derived(aug.clip.id(), &info, AugmentationKind::TransposeUncompensated));
        c.features.push(compute_mcms(&aug.clip, &fcfg).unwrap());
        c.annotations.push(aug.annotations);
        c.tracks.push(info);
        c.features.push(compute_mcms(&t.clip, &fcfg).unwrap());
        c.annotations.push(t.annotation.clone());
    }
    c
}

fn small_cfg() -> TrainConfig {
    TrainConfig {
        max_epochs: 2,
        patience: 1,
        batch_size: 32,
        max_positives_per_epoch: Some(64),
        ..TrainConfig::default()
    }
}

#[test]
fn campaign_runs_every_job_and_is_reproducible() {
    let c = corpus();
    let data = c.data();
    let strategy = Strategy::Augment(AugmentationKind::TransposeUncompensated);
    let plan = CrossValPlan::build(&c.tracks, &strategy, 0.34, 3).unwrap();
    let run =
        || run_crossval(&plan, &data, &strategy, &[1], Topology::tiny(), &small_cfg(), &EvalConfig::default()).unwrap();
    let (report, outcomes) = run();
    assert_eq!(outcomes.len(), 4 * 3);
    assert_eq!(report.runs, 12);
    assert_eq!(report.fold_scores.len(), 4);
    assert_eq!(report.label, "t nc");
    for s in report.scores {
        assert!((0.0..=1.0).contains(&s.f_measure));
    }
    let (again, outcomes2) = run();
    assert_eq!(report, again);
    for (a, b) in outcomes.iter().zip(&outcomes2) {
        assert_eq!(a.params.values(), b.params.values());
        assert_eq!(a.threshold, b.threshold);
    }
}

#[test]
fn hygiene_violation_aborts_before_training() {
    let c = corpus();
    let data = c.data();
    let mut plan = CrossValPlan::build(&c.tracks, &Strategy::All, 0.34, 3).unwrap();
    let test_id = plan.tracks[plan.folds[2].test[0]].id.clone();
    let leak = plan.tracks.iter().position(|t| t.parent_id.as_deref() == Some(&test_id)).unwrap();
    plan.folds[2].train.push(leak);
    let err = run_crossval(&plan, &data, &Strategy::All, &[1], Topology::tiny(), &small_cfg(), &EvalConfig::default());
    assert!(matches!(err, Err(Error::Hygiene(_))));
}
