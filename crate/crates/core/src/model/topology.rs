use alloc::format;

use crate::error::{Error, Result};

/// Valid 2-D convolution over (time, frequency).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct ConvSpec {
    pub time: usize,
    pub freq: usize,
    pub filters: usize,
}

/// Non-overlapping max pooling over (time, frequency).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PoolSpec {
    pub time: usize,
    pub freq: usize,
}

/// Activation map shape: channels x time x frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape3 {
    pub c: usize,
    pub t: usize,
    pub f: usize,
}

impl Shape3 {
    pub fn len(&self) -> usize {
        self.c * self.t * self.f
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// conv - ReLU - pool - conv - ReLU - pool - dense - ReLU - dense - sigmoid,
/// applied to a `channels x context x bands` input patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Topology {
    pub channels: usize,
    pub context: usize,
    pub bands: usize,
    pub conv1: ConvSpec,
    pub pool1: PoolSpec,
    pub conv2: ConvSpec,
    pub pool2: PoolSpec,
    pub hidden: usize,
}

impl Default for Topology {
    fn default() -> Self {
        Self {
            channels: 3,
            context: 15,
            bands: 80,
            conv1: ConvSpec { time: 7, freq: 3, filters: 10 },
            pool1: PoolSpec { time: 1, freq: 3 },
            conv2: ConvSpec { time: 3, freq: 3, filters: 20 },
            pool2: PoolSpec { time: 1, freq: 3 },
            hidden: 256,
        }
    }
}

fn conv_out(s: Shape3, c: ConvSpec) -> Option<Shape3> {
    Some(Shape3 { c: c.filters, t: (s.t + 1).checked_sub(c.time)?, f: (s.f + 1).checked_sub(c.freq)? })
}

fn pool_out(s: Shape3, p: PoolSpec) -> Option<Shape3> {
    Some(Shape3 { c: s.c, t: s.t.checked_div(p.time)?, f: s.f.checked_div(p.freq)? })
}

/// Activation shapes through the stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShapes {
    pub input: Shape3,
    pub conv1: Shape3,
    pub pool1: Shape3,
    pub conv2: Shape3,
    pub pool2: Shape3,
    pub flat: usize,
    pub hidden: usize,
}

impl Topology {
    /// A small stack for tests and gradient checks.
    pub fn tiny() -> Self {
        Self {
            channels: 3,
            context: 7,
            bands: 12,
            conv1: ConvSpec { time: 3, freq: 3, filters: 3 },
            pool1: PoolSpec { time: 1, freq: 2 },
            conv2: ConvSpec { time: 3, freq: 2, filters: 4 },
            pool2: PoolSpec { time: 1, freq: 2 },
            hidden: 5,
        }
    }

    pub fn shapes(&self) -> Result<LayerShapes> {
        let bad = || Error::InvalidTopology(format!("{self:?} leaves an empty activation map"));
        let dims = [
            self.channels,
            self.context,
            self.bands,
            self.conv1.time,
            self.conv1.freq,
            self.conv1.filters,
            self.pool1.time,
            self.pool1.freq,
            self.conv2.time,
            self.conv2.freq,
            self.conv2.filters,
            self.pool2.time,
            self.pool2.freq,
            self.hidden,
        ];
        if dims.contains(&0) {
            return Err(Error::InvalidTopology(format!("all dimensions must be positive: {self:?}")));
        }
        let input = Shape3 { c: self.channels, t: self.context, f: self.bands };
        let conv1 = conv_out(input, self.conv1).ok_or_else(bad)?;
        let pool1 = pool_out(conv1, self.pool1).ok_or_else(bad)?;
        let conv2 = conv_out(pool1, self.conv2).ok_or_else(bad)?;
        let pool2 = pool_out(conv2, self.pool2).ok_or_else(bad)?;
        if [conv1, pool1, conv2, pool2].iter().any(Shape3::is_empty) {
            return Err(bad());
        }
        Ok(LayerShapes { input, conv1, pool1, conv2, pool2, flat: pool2.len(), hidden: self.hidden })
    }

    pub fn validate(&self) -> Result<()> {
        self.shapes().map(|_| ())
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.context * self.bands
    }

    /// Whether every layer slides along time one frame at a time, so the
    /// activations of neighboring patches can be shared.
    pub fn time_shareable(&self) -> bool {
        self.pool1.time == 1 && self.pool2.time == 1
    }
}
