use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid audio clip: {0}")]
    InvalidClip(String),
    #[error("invalid STFT configuration: {0}")]
    InvalidStftConfig(String),
    #[error("window/hop pair fails the overlap-add condition (min/max squared-window sum {ratio:.3e})")]
    OverlapAdd { ratio: f64 },
    #[error("resampling ratio must be positive and finite, got {0}")]
    InvalidRatio(f64),
    #[error("cepstral order {order} out of range for {bins} bins")]
    EnvelopeOrder { order: usize, bins: usize },
    #[error("invalid augmentation parameter: {0}")]
    InvalidAugmentation(String),
    #[error("upper band edge {f_hi} Hz exceeds Nyquist ({nyquist} Hz)")]
    BandEdgeAboveNyquist { f_hi: f64, nyquist: f64 },
    #[error("sample rate {got} Hz is below the frontend minimum of {min} Hz")]
    SampleRateTooLow { got: u32, min: u32 },
    #[error("invalid feature configuration: {0}")]
    InvalidFeatureConfig(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid training configuration: {0}")]
    InvalidTrainConfig(String),
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    #[error("dropout probability must lie in [0, 1), got {0}")]
    DropoutProbability(f64),
    #[error("invalid annotation: {0}")]
    InvalidAnnotation(String),
    #[error("fold hygiene violation: {0}")]
    Hygiene(String),
    #[error("empty dataset: {0}")]
    EmptyDataset(String),
}

pub type Result<T> = core::result::Result<T, Error>;
