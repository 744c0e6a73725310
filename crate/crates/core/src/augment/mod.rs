//! The four label-preserving audio transforms and grid expansion.

mod grid;
mod remix;
mod spec;
mod transpose;
mod vocoder;

pub use grid::{
    apply, augment_item, derived_id, expand_grid, grid_jobs, AugmentationGrid, AugmentedItem, GridJob, GridOutcome,
    SourceItem,
};
pub use remix::{remix_attacks, remix_noise, ATTACK_FADE_SECONDS};
pub use spec::{AugmentationKind, AugmentationSpec, MAX_TRANSPOSITION_CENTS};
pub use transpose::{shift_envelope, transpose, MAX_ENVELOPE_GAIN_DB};
pub use vocoder::{stretch_to_length, TimeMap};
