use alloc::format;
use alloc::vec::Vec;

use super::{ModelParams, Network, Topology};
use crate::error::{Error, Result};
use crate::features::McmsTensor;

/// Per-frame onset probability of one instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationCurve {
    pub values: Vec<f64>,
    /// Frame spacing; frame `t` is centered at `t * hop_seconds`.
    pub hop_seconds: f64,
}

impl ActivationCurve {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, frame: usize) -> f64 {
        frame as f64 * self.hop_seconds
    }
}

fn check_features(topology: &Topology, features: &McmsTensor) -> Result<()> {
    if features.n_channels() != topology.channels || features.n_bands() != topology.bands {
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels x {} bands", topology.channels, topology.bands),
            got: format!("{} x {}", features.n_channels(), features.n_bands()),
        });
    }
    Ok(())
}

/// Frame source row of padded row `r`: rows before the start and past the
/// end repeat the first and last frame.
fn source_frame(r: isize, n_frames: usize) -> usize {
    r.clamp(0, n_frames as isize - 1) as usize
}

/// Writes the `channels x context x bands` patch centered on `frame`
/// (edge frames replicated) into `out`.
pub fn extract_patch(features: &McmsTensor, frame: usize, context: usize, out: &mut [f64]) {
    let (nb, nt) = (features.n_bands(), features.n_frames());
    let first = frame as isize - (context / 2) as isize;
    for c in 0..features.n_channels() {
        for dt in 0..context {
            let src = features.frame(c, source_frame(first + dt as isize, nt));
            let dst = &mut out[(c * context + dt) * nb..(c * context + dt + 1) * nb];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d = s as f64;
            }
        }
    }
}

/// Slides the detector over every frame: frame `t` is scored on the
/// context window centered on it, with edge frames replicated.
pub fn predict_curve(params: &ModelParams, features: &McmsTensor) -> Result<ActivationCurve> {
    let topo = *params.topology();
    check_features(&topo, features)?;
    let (nt, nb, w) = (features.n_frames(), features.n_bands(), topo.context);
    let len = nt + w - 1;
    let first = -((w / 2) as isize);
    let mut block = Vec::with_capacity(topo.channels * len * nb);
    for c in 0..topo.channels {
        for r in 0..len {
            block.extend(features.frame(c, source_frame(first + r as isize, nt)).iter().map(|&v| v as f64));
        }
    }
    let mut net = Network::new(topo)?;
    let mut values = Vec::with_capacity(nt);
    net.predict_sequence(params, &block, len, &mut values)?;
    Ok(ActivationCurve { values, hop_seconds: features.hop_seconds() })
}

/// Training target per frame: 1 within `radius` frames of an onset's
/// nearest frame, else 0.
pub fn frame_targets(n_frames: usize, hop_seconds: f64, onsets: &[f64], radius: usize) -> Vec<f64> {
    let mut t = alloc::vec![0.0; n_frames];
    for &o in onsets {
        let c = libm::round(o / hop_seconds) as isize;
        for f in c - radius as isize..=c + radius as isize {
            if f >= 0 && (f as usize) < n_frames {
                t[f as usize] = 1.0;
            }
        }
    }
    t
}
