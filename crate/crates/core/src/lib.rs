//! Core algorithms for CNN drum transcription with signal-domain data augmentation.
//!
//! Everything in this crate is pure computation on in-memory buffers: no file
//! system, no threads, no clocks. It builds under `#![no_std]` with `alloc`;
//! the `drumaug` crate layers WAV I/O, on-disk formats, parallel batch
//! orchestration and the command line on top.
//!
//! Module map:
//!
//! - [`signal`]: audio clips, STFT/ISTFT, band-limited resampling
//! - [`analysis`]: sinusoid/noise peak classification, transient detection,
//!   cepstral spectral envelopes
//! - [`augment`]: noise remixing, attack remixing, transposition with and
//!   without time compensation, envelope transposition, grid expansion
//! - [`features`]: mel filterbanks and the 3-channel log-mel (MCMS) frontend
//! - [`model`]: per-instrument CNN detectors, regularizers, Adam training
//! - [`eval`]: peak picking, tolerance matching, metrics, cross-database
//!   validation
//! - [`synth`]: synthetic drum tracks with exact annotations

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod analysis;
pub mod augment;
pub mod error;
pub mod eval;
pub mod features;
pub mod fft;
pub mod model;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};
pub use signal::{AudioClip, SpectralFrameSequence, StftConfig, WindowKind};
