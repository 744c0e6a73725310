use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{remix_attacks, remix_noise, transpose, AugmentationKind, AugmentationSpec};
use crate::error::{Error, Result};
use crate::eval::OnsetAnnotation;
use crate::signal::AudioClip;

/// Parameter values swept per transform.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct AugmentationGrid {
    pub remix_noise: Vec<f64>,
    pub remix_attacks: Vec<f64>,
    /// Transposition in cents, shared by the compensated and uncompensated modes.
    pub transpose: Vec<f64>,
    /// Envelope transposition in cents, crossed with every `transpose` value.
    pub envelope: Vec<f64>,
}

impl Default for AugmentationGrid {
    fn default() -> Self {
        Self {
            remix_noise: vec![0.1, 0.3, 0.6, 1.5, 2.0, 3.0],
            remix_attacks: vec![0.6, 1.5, 2.0, 3.0],
            transpose: vec![-300.0, -200.0, -100.0, 100.0, 200.0, 300.0],
            envelope: vec![-300.0, -200.0, -100.0, 0.0, 100.0, 200.0, 300.0],
        }
    }
}

impl AugmentationGrid {
    /// Every spec of one transform family, in sort order.
    pub fn specs(&self, kind: AugmentationKind) -> Vec<AugmentationSpec> {
        let mut out: Vec<AugmentationSpec> = match kind {
            AugmentationKind::RemixNoise => {
                self.remix_noise.iter().map(|&factor| AugmentationSpec::RemixNoise { factor }).collect()
            }
            AugmentationKind::RemixAttacks => {
                self.remix_attacks.iter().map(|&factor| AugmentationSpec::RemixAttacks { factor }).collect()
            }
            AugmentationKind::Transpose | AugmentationKind::TransposeUncompensated => {
                let compensate = kind == AugmentationKind::Transpose;
                self.transpose
                    .iter()
                    .flat_map(|&cents| {
                        self.envelope.iter().map(move |&envelope_cents| AugmentationSpec::Transpose {
                            cents,
                            envelope_cents,
                            compensate,
                        })
                    })
                    .collect()
            }
        };
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup_by(|a, b| a.total_cmp(b).is_eq());
        out
    }

    /// Fails when a selected family has no values or a value is out of range.
    pub fn validate(&self, kinds: &[AugmentationKind]) -> Result<()> {
        for &kind in kinds {
            let specs = self.specs(kind);
            if specs.is_empty() {
                return Err(Error::InvalidAugmentation(format!("empty parameter grid for {}", kind.label())));
            }
            for s in &specs {
                s.validate()?;
            }
        }
        Ok(())
    }
}

/// An original clip with its annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceItem {
    pub clip: AudioClip,
    pub annotations: OnsetAnnotation,
}

/// Output of one transform applied to one source.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedItem {
    pub clip: AudioClip,
    pub spec: AugmentationSpec,
    /// Parent annotations, time-scaled for uncompensated transposition.
    pub annotations: OnsetAnnotation,
    pub parent_id: String,
}

/// Identity of the item derived from `parent_id` by `spec`.
pub fn derived_id(parent_id: &str, spec: &AugmentationSpec) -> String {
    format!("{parent_id}__{}", spec.slug())
}

/// Runs one transform.
pub fn apply(clip: &AudioClip, spec: &AugmentationSpec) -> Result<AudioClip> {
    spec.validate()?;
    match *spec {
        AugmentationSpec::RemixNoise { factor } => remix_noise(clip, factor),
        AugmentationSpec::RemixAttacks { factor } => remix_attacks(clip, factor),
        AugmentationSpec::Transpose { cents, envelope_cents, compensate } => {
            transpose(clip, cents, envelope_cents, compensate)
        }
    }
}

/// Applies `spec` to one source and carries its labels over.
pub fn augment_item(source: &SourceItem, spec: &AugmentationSpec) -> Result<AugmentedItem> {
    let parent_id = String::from(source.clip.id());
    let id = derived_id(&parent_id, spec);
    let clip = apply(&source.clip, spec)?.with_id(id.clone());
    let annotations = source.annotations.scaled(spec.time_scale(), id);
    Ok(AugmentedItem { clip, spec: *spec, annotations, parent_id })
}

/// One (source, spec) cell of a grid expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct GridJob {
    pub source_index: usize,
    pub spec: AugmentationSpec,
}

/// Enumerates the (source, spec) pairs of a grid expansion in output order:
/// sorted by parent id, then by spec.
pub fn grid_jobs(dataset: &[SourceItem], grid: &AugmentationGrid, kinds: &[AugmentationKind]) -> Result<Vec<GridJob>> {
    grid.validate(kinds)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| dataset[a].clip.id().cmp(dataset[b].clip.id()));
    let mut kinds = kinds.to_vec();
    kinds.sort();
    kinds.dedup();
    let specs: Vec<AugmentationSpec> = kinds.iter().flat_map(|&k| grid.specs(k)).collect();
    Ok(order.into_iter().flat_map(|i| specs.iter().map(move |s| GridJob { source_index: i, spec: *s })).collect())
}

/// Per-item outcome of [`expand_grid`]; failures do not abort the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub parent_id: String,
    pub spec: AugmentationSpec,
    pub result: Result<AugmentedItem>,
}

/// Applies every selected grid value to every source clip.
pub fn expand_grid(
    dataset: &[SourceItem],
    grid: &AugmentationGrid,
    kinds: &[AugmentationKind],
) -> Result<Vec<GridOutcome>> {
    let jobs = grid_jobs(dataset, grid, kinds)?;
    Ok(jobs
        .into_iter()
        .map(|job| {
            let source = &dataset[job.source_index];
            GridOutcome {
                parent_id: String::from(source.clip.id()),
                spec: job.spec,
                result: augment_item(source, &job.spec),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{Instrument, Onset};

    #[test]
    fn default_grid_sizes() {
        let g = AugmentationGrid::default();
        assert_eq!(g.specs(AugmentationKind::RemixNoise).len(), 6);
        assert_eq!(g.specs(AugmentationKind::RemixAttacks).len(), 4);
        assert_eq!(g.specs(AugmentationKind::Transpose).len(), 42);
        assert_eq!(g.specs(AugmentationKind::TransposeUncompensated).len(), 42);
    }

    #[test]
    fn duplicate_grid_values_collapse() {
        let g = AugmentationGrid {
            envelope: vec![-300.0, -200.0, -100.0, 100.0, 0.0, 100.0, 200.0, 300.0],
            ..AugmentationGrid::default()
        };
        assert_eq!(g.specs(AugmentationKind::Transpose).len(), 42);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let g = AugmentationGrid { remix_attacks: vec![], ..AugmentationGrid::default() };
        assert!(grid_jobs(&[], &g, &[AugmentationKind::RemixAttacks]).is_err());
        assert!(grid_jobs(&[], &g, &[AugmentationKind::RemixNoise]).unwrap().is_empty());
    }

    #[test]
    fn empty_dataset_gives_empty_output() {
        let out = expand_grid(&[], &AugmentationGrid::default(), &AugmentationKind::ALL).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn jobs_sorted_by_parent_then_spec() {
        let mk = |id: &str| SourceItem {
            clip: AudioClip::new(vec![0.0; 10], 44100, id).unwrap(),
            annotations: OnsetAnnotation::new(vec![Onset { time: 0.0, instrument: Instrument::Bd }], id).unwrap(),
        };
        let data = [mk("b"), mk("a")];
        let jobs = grid_jobs(&data, &AugmentationGrid::default(), &[AugmentationKind::RemixNoise]).unwrap();
        assert_eq!(jobs.len(), 12);
        assert_eq!(jobs[0].source_index, 1);
        assert_eq!(jobs[0].spec, AugmentationSpec::RemixNoise { factor: 0.1 });
        assert_eq!(jobs[6].source_index, 0);
    }
}
