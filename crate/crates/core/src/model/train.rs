use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::curve::extract_patch;
use super::regularize::{check_dropout, check_sigma};
use super::{add_input_noise, Adam, Mode, ModelParams, Network, Topology};
use crate::error::{Error, Result};
use crate::features::McmsTensor;

/// Optimization and regularization settings of one training run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct TrainConfig {
    /// Dropout probability on the dense hidden layer.
    pub dropout: f64,
    /// Standard deviation of the Gaussian noise added to input patches.
    pub input_noise: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a better validation score before stopping.
    pub patience: usize,
    /// Negative frames drawn per positive frame each epoch.
    pub negative_ratio: f64,
    /// Frames within this distance of an onset are positives.
    pub target_radius: usize,
    /// Upper bound on positives drawn per epoch (all when `None`).
    pub max_positives_per_epoch: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dropout: 0.0,
            input_noise: 0.0,
            learning_rate: 1e-3,
            batch_size: 256,
            max_epochs: 100,
            patience: 20,
            negative_ratio: 3.0,
            target_radius: 1,
            max_positives_per_epoch: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        check_dropout(self.dropout)?;
        check_sigma(self.input_noise)?;
        let bad = |m: &str| Err(Error::InvalidTrainConfig(m.into()));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch size, max epochs and patience must be positive");
        }
        if !(self.negative_ratio >= 0.0 && self.negative_ratio.is_finite()) {
            return bad("negative ratio must be >= 0");
        }
        if self.max_positives_per_epoch == Some(0) {
            return bad("max positives per epoch must be positive");
        }
        Ok(())
    }
}

/// Features of one track with a target per frame.
#[derive(Debug, Clone)]
pub struct TrainingSequence<'a> {
    pub features: &'a McmsTensor,
    pub targets: Vec<f64>,
}

/// One epoch of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_f: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (1-based; 0 if none improved on -1).
    pub best_epoch: usize,
    pub best_validation_f: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: TrainingLog,
}

/// Trains one detector with Adam on binary cross-entropy.
///
/// Each epoch visits every positive frame (up to `max_positives_per_epoch`)
/// and `negative_ratio` times as many random negatives, in shuffled
/// minibatches. After each epoch `validate` scores the current parameters;
/// the best-scoring snapshot is returned, and training stops after
/// `patience` epochs without improvement. All randomness derives from
/// `seed`, so equal inputs give bit-identical results.
pub fn train(
    topology: Topology,
    data: &[TrainingSequence<'_>],
    validate: &mut dyn FnMut(&ModelParams) -> Result<f64>,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    topology.validate()?;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (s, seq) in data.iter().enumerate() {
        if seq.targets.len() != seq.features.n_frames() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} targets", seq.features.n_frames()),
                got: format!("{}", seq.targets.len()),
            });
        }
        for (t, &y) in seq.targets.iter().enumerate() {
            if y >= 0.5 {
                positives.push((s as u32, t as u32));
            } else {
                negatives.push((s as u32, t as u32));
            }
        }
    }
    if positives.is_empty() {
        return Err(Error::EmptyDataset("no positive frames in the training set".into()));
    }

    let mut params = ModelParams::init(topology, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut net = Network::new(topology)?;
    let mut adam = Adam::new(params.len(), cfg.learning_rate);
    let mut grad = vec![0.0; params.len()];
    let n_in = topology.input_len();
    let mut inputs = Vec::with_capacity(cfg.batch_size * n_in);
    let mut targets = Vec::with_capacity(cfg.batch_size);
    let mut log = TrainingLog { best_validation_f: -1.0, ..TrainingLog::default() };
    let mut best = params.clone();

    for epoch in 1..=cfg.max_epochs {
        let n_pos = cfg.max_positives_per_epoch.map_or(positives.len(), |m| m.min(positives.len()));
        let mut order: Vec<(u32, u32)> =
            index::sample(&mut rng, positives.len(), n_pos).iter().map(|i| positives[i]).collect();
        let n_neg = (libm::ceil(cfg.negative_ratio * n_pos as f64) as usize).min(negatives.len());
        order.extend(index::sample(&mut rng, negatives.len(), n_neg).iter().map(|i| negatives[i]));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            inputs.resize(chunk.len() * n_in, 0.0);
            targets.clear();
            for (i, &(s, t)) in chunk.iter().enumerate() {
                let seq = &data[s as usize];
                extract_patch(seq.features, t as usize, topology.context, &mut inputs[i * n_in..(i + 1) * n_in]);
                targets.push(seq.targets[t as usize]);
            }
            add_input_noise(&mut inputs, cfg.input_noise, Mode::Training, &mut rng)?;
            grad.fill(0.0);
            let loss = net.loss_and_gradient(&params, &inputs, &targets, Some((cfg.dropout, &mut rng)), &mut grad)?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch, detail: format!("non-finite loss or gradient ({loss})") });
            }
            adam.step(params.values_mut(), &grad);
            loss_sum += loss * chunk.len() as f64;
        }
        let train_loss = loss_sum / order.len() as f64;
        if !params.is_finite() {
            return Err(Error::Diverged { epoch, detail: "non-finite parameters".into() });
        }
        let validation_f = validate(&params)?;
        log.epochs.push(EpochRecord { epoch, train_loss, validation_f });
        if validation_f > log.best_validation_f {
            log.best_validation_f = validation_f;
            log.best_epoch = epoch;
            best.values_mut().copy_from_slice(params.values());
        }
        if epoch - log.best_epoch >= cfg.patience {
            break;
        }
    }
    Ok(TrainOutcome { params: best, log })
}
