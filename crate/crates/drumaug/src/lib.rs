//! File formats, run configuration and the batch pipeline around
//! [`drumaug_core`]: WAV and annotation IO, feature caches, checkpoints,
//! reports, and the `augment -> features -> train -> evaluate` stages
//! behind the `drumaug` command.

pub mod annotations;
pub mod audio;
pub mod checkpoint;
pub mod config;
pub mod error;
pub mod featcache;
pub mod pipeline;
pub mod report;

pub use config::{DatasetConfig, RunConfig};
pub use error::{Error, Result};
pub use pipeline::{Run, StageSummary};
