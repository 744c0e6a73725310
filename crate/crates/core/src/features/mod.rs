//! Multi-channel mel spectrogram (MCMS) frontend: three log-mel spectrograms
//! with different window lengths on a shared 10 ms frame grid.

mod mcms;
mod mel;

pub use mcms::{compute_mcms, McmsConfig, McmsTensor, MIN_SAMPLE_RATE, N_CHANNELS};
pub use mel::{hz_to_mel, mel_filterbank, mel_to_hz, MelFilterbank};
