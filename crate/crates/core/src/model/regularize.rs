use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Whether regularizers act.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Training,
    Evaluation,
}

pub(crate) fn check_dropout(p: f64) -> Result<()> {
    if (0.0..1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::DropoutProbability(p))
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTrainConfig(alloc::format!("input noise sigma must be >= 0, got {sigma}")))
    }
}

/// Fills `mask` with `0` (probability `p`) or `1 / (1 - p)`.
pub(crate) fn dropout_mask<R: Rng + ?Sized>(mask: &mut [f64], p: f64, rng: &mut R) {
    let keep = 1.0 / (1.0 - p);
    for m in mask.iter_mut() {
        *m = if rng.random::<f64>() < p { 0.0 } else { keep };
    }
}

/// Inverted dropout: zeroes each activation with probability `p` and scales
/// the survivors by `1 / (1 - p)`. Identity in evaluation mode or for `p = 0`.
pub fn apply_dropout<R: Rng + ?Sized>(activations: &mut [f64], p: f64, mode: Mode, rng: &mut R) -> Result<()> {
    check_dropout(p)?;
    if mode == Mode::Evaluation || p == 0.0 {
        return Ok(());
    }
    let keep = 1.0 / (1.0 - p);
    for a in activations.iter_mut() {
        *a = if rng.random::<f64>() < p { 0.0 } else { *a * keep };
    }
    Ok(())
}

/// Adds i.i.d. `N(0, sigma^2)` noise. Identity in evaluation mode or for
/// `sigma = 0`.
pub fn add_input_noise<R: Rng + ?Sized>(patch: &mut [f64], sigma: f64, mode: Mode, rng: &mut R) -> Result<()> {
    check_sigma(sigma)?;
    if mode == Mode::Evaluation || sigma == 0.0 {
        return Ok(());
    }
    for v in patch.iter_mut() {
        let n: f64 = StandardNormal.sample(rng);
        *v += sigma * n;
    }
    Ok(())
}
