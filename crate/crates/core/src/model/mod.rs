//! Per-instrument CNN onset detectors: conv-pool-conv-pool-dense-sigmoid
//! over 3-channel log-mel patches, trained with Adam on cross-entropy, with
//! dropout and input-noise regularizers.

mod adam;
mod curve;
mod layers;
mod network;
mod params;
mod regularize;
mod topology;
mod train;

pub use adam::Adam;
pub use curve::{extract_patch, frame_targets, predict_curve, ActivationCurve};
pub use layers::{loss, sigmoid, LOSS_EPSILON};
pub use network::{forward, trace_shapes, Network};
pub use params::{tensor_shapes, ModelParams, TENSOR_NAMES};
pub use regularize::{add_input_noise, apply_dropout, Mode};
pub use topology::{ConvSpec, LayerShapes, PoolSpec, Shape3, Topology};
pub use train::{train, EpochRecord, TrainConfig, TrainOutcome, TrainingLog, TrainingSequence};
