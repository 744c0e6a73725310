use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Topology;
use crate::error::{Error, Result};

/// Names of the parameter tensors, in storage order.
pub const TENSOR_NAMES: [&str; 8] = [
    "conv1.weight",
    "conv1.bias",
    "conv2.weight",
    "conv2.bias",
    "dense.weight",
    "dense.bias",
    "output.weight",
    "output.bias",
];

pub(crate) const W1: usize = 0;
pub(crate) const B1: usize = 1;
pub(crate) const W2: usize = 2;
pub(crate) const B2: usize = 3;
pub(crate) const W3: usize = 4;
pub(crate) const B3: usize = 5;
pub(crate) const W4: usize = 6;
pub(crate) const B4: usize = 7;

/// Shape of every parameter tensor of `topology`, in storage order.
///
/// Convolution kernels are `[out, in, time, freq]`; dense weights are
/// `[out, in]`.
pub fn tensor_shapes(topology: &Topology) -> Result<[Vec<usize>; 8]> {
    let s = topology.shapes()?;
    let (c1, c2) = (topology.conv1, topology.conv2);
    Ok([
        vec![c1.filters, topology.channels, c1.time, c1.freq],
        vec![c1.filters],
        vec![c2.filters, c1.filters, c2.time, c2.freq],
        vec![c2.filters],
        vec![s.hidden, s.flat],
        vec![s.hidden],
        vec![1, s.hidden],
        vec![1],
    ])
}

/// Flat storage of all weights and biases of one detector.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    topology: Topology,
    seed: u64,
    values: Vec<f64>,
    offsets: [usize; 9],
}

fn offsets(shapes: &[Vec<usize>; 8]) -> [usize; 9] {
    let mut o = [0; 9];
    for (i, s) in shapes.iter().enumerate() {
        o[i + 1] = o[i] + s.iter().product::<usize>();
    }
    o
}

impl ModelParams {
    /// All parameters zero.
    pub fn zeros(topology: Topology) -> Result<Self> {
        let offsets = offsets(&tensor_shapes(&topology)?);
        Ok(Self { topology, seed: 0, values: vec![0.0; offsets[8]], offsets })
    }

    /// Glorot-uniform weights drawn from a seeded ChaCha8 stream, zero biases.
    pub fn init(topology: Topology, seed: u64) -> Result<Self> {
        let shapes = tensor_shapes(&topology)?;
        let mut p = Self::zeros(topology)?;
        p.seed = seed;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in [W1, W2, W3, W4] {
            let s = &shapes[i];
            let receptive: usize = s[2..].iter().product();
            let (fan_in, fan_out) = (s[1] * receptive, s[0] * receptive);
            let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
            for w in p.tensor_mut(i) {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(p)
    }

    /// Rebuilds parameters from their flat values (e.g. a checkpoint).
    pub fn from_values(topology: Topology, seed: u64, values: Vec<f64>) -> Result<Self> {
        let offsets = offsets(&tensor_shapes(&topology)?);
        if values.len() != offsets[8] {
            return Err(Error::ShapeMismatch {
                expected: format!("{} parameters", offsets[8]),
                got: format!("{}", values.len()),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch { expected: "finite parameters".into(), got: "non-finite value".into() });
        }
        Ok(Self { topology, seed, values, offsets })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Storage range of tensor `i` (see [`TENSOR_NAMES`]).
    pub fn range(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn tensor(&self, i: usize) -> &[f64] {
        &self.values[self.range(i)]
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut [f64] {
        let r = self.range(i);
        &mut self.values[r]
    }

    pub fn tensor_shapes(&self) -> [Vec<usize>; 8] {
        tensor_shapes(&self.topology).expect("topology validated at construction")
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
