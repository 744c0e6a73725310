use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::augment::AugmentationKind;
use crate::error::{Error, Result};
use crate::model::TrainConfig;

/// How the training data is enlarged or the network regularized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// No augmentation, no dropout, no noise: the reference row.
    Original,
    /// Dropout on the dense hidden layer with this probability.
    Dropout(f64),
    /// Gaussian noise with this standard deviation on input patches.
    Gauss(f64),
    /// Originals plus their augmentations of one family.
    Augment(AugmentationKind),
    /// Originals plus every augmentation family.
    All,
}

impl Strategy {
    /// Row label of the report, e.g. `Orig.`, `Drop. 0.25`, `t nc`.
    pub fn label(&self) -> String {
        match *self {
            Strategy::Original => "Orig.".into(),
            Strategy::Dropout(p) => format!("Drop. {p}"),
            Strategy::Gauss(s) => format!("Gaus. {s}"),
            Strategy::Augment(AugmentationKind::TransposeUncompensated) => "t nc".into(),
            Strategy::Augment(k) => k.label().into(),
            Strategy::All => "All".into(),
        }
    }

    /// Augmentation families whose items join the training set.
    pub fn augmentation_kinds(&self) -> Vec<AugmentationKind> {
        match *self {
            Strategy::Augment(k) => alloc::vec![k],
            Strategy::All => AugmentationKind::ALL.to_vec(),
            _ => Vec::new(),
        }
    }

    /// Whether a track of the given augmentation family (`None` for an
    /// original) is used for training under this strategy.
    pub fn admits(&self, kind: Option<AugmentationKind>) -> bool {
        match kind {
            None => true,
            Some(k) => self.augmentation_kinds().contains(&k),
        }
    }

    /// `base` with the strategy's regularizer switched on. Augmentation
    /// strategies train with `base` unchanged.
    pub fn train_config(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        match *self {
            Strategy::Dropout(p) => cfg.dropout = p,
            Strategy::Gauss(s) => cfg.input_noise = s,
            _ => {}
        }
        cfg
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Strategy::Original => f.write_str("original"),
            Strategy::Dropout(p) => write!(f, "dropout({p})"),
            Strategy::Gauss(s) => write!(f, "gauss({s})"),
            Strategy::Augment(k) => f.write_str(k.label()),
            Strategy::All => f.write_str("all"),
        }
    }
}

/// Parses `original`, `dropout(0.25)`, `gauss(0.05)`, `rn`, `ra`, `t`,
/// `t_nc` (or `t nc`) and `all`.
impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let arg = |name: &str| -> Option<Result<f64>> {
            let inner = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(inner.trim().parse::<f64>().map_err(|_| Error::InvalidTrainConfig(format!("bad parameter in {s:?}"))))
        };
        if let Some(p) = arg("dropout") {
            return Ok(Strategy::Dropout(p?));
        }
        if let Some(v) = arg("gauss") {
            return Ok(Strategy::Gauss(v?));
        }
        match s.as_str() {
            "original" | "orig" => Ok(Strategy::Original),
            "rn" => Ok(Strategy::Augment(AugmentationKind::RemixNoise)),
            "ra" => Ok(Strategy::Augment(AugmentationKind::RemixAttacks)),
            "t" => Ok(Strategy::Augment(AugmentationKind::Transpose)),
            "t_nc" | "t nc" | "tnc" => Ok(Strategy::Augment(AugmentationKind::TransposeUncompensated)),
            "all" => Ok(Strategy::All),
            _ => Err(Error::InvalidTrainConfig(format!("unknown strategy {s:?}"))),
        }
    }
}
