use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::layers::{
    conv_backward, conv_out_shape, conv_relu_forward, gemm, im2col, loss, maxpool_forward, maxpool_relu_backward,
    sigmoid,
};
use super::params::{B1, B2, B3, B4, W1, W2, W3, W4};
use super::regularize::{check_dropout, dropout_mask};
use super::topology::{LayerShapes, Shape3};
use super::{ModelParams, Topology};
use crate::error::{Error, Result};

/// Samples pushed through the convolutional part per GEMM.
const CONV_CHUNK: usize = 32;

/// Convolutional activations of one chunk, stored `[channel][sample][time][freq]`.
#[derive(Debug, Clone, Default)]
struct TrunkCache {
    batch: usize,
    x: Vec<f64>,
    a1: Vec<f64>,
    p1: Vec<f64>,
    idx1: Vec<u32>,
    a2: Vec<f64>,
    p2: Vec<f64>,
    idx2: Vec<u32>,
}

/// Runs conv-ReLU-pool twice over `c.x`, a batch of inputs of shape `s`
/// (any time length). Returns the per-sample shape of the second pooling
/// output, left in `c.p2`.
fn trunk_forward(topo: &Topology, params: &ModelParams, s: Shape3, c: &mut TrunkCache, col: &mut Vec<f64>) -> Shape3 {
    let batch = c.batch;
    let s1 = conv_out_shape(s, topo.conv1);
    let q1 = Shape3 { c: s1.c, t: s1.t / topo.pool1.time, f: s1.f / topo.pool1.freq };
    let s2 = conv_out_shape(q1, topo.conv2);
    let q2 = Shape3 { c: s2.c, t: s2.t / topo.pool2.time, f: s2.f / topo.pool2.freq };
    let k1 = s.c * topo.conv1.time * topo.conv1.freq;
    let k2 = q1.c * topo.conv2.time * topo.conv2.freq;
    c.a1.resize(batch * s1.len(), 0.0);
    c.p1.resize(batch * q1.len(), 0.0);
    c.idx1.resize(batch * q1.len(), 0);
    c.a2.resize(batch * s2.len(), 0.0);
    c.p2.resize(batch * q2.len(), 0.0);
    c.idx2.resize(batch * q2.len(), 0);
    col.resize((k1 * s1.t * s1.f).max(k2 * s2.t * s2.f) * batch, 0.0);
    conv_relu_forward(&c.x, batch, s, topo.conv1, params.tensor(W1), params.tensor(B1), col, &mut c.a1);
    maxpool_forward(&c.a1, batch, s1, topo.pool1, &mut c.p1, &mut c.idx1);
    conv_relu_forward(&c.p1, batch, q1, topo.conv2, params.tensor(W2), params.tensor(B2), col, &mut c.a2);
    maxpool_forward(&c.a2, batch, s2, topo.pool2, &mut c.p2, &mut c.idx2);
    q2
}

/// Forward/backward engine with reusable buffers for one topology.
#[derive(Debug, Clone)]
pub struct Network {
    topology: Topology,
    shapes: LayerShapes,
    chunks: Vec<TrunkCache>,
    col: Vec<f64>,
    dcol: Vec<f64>,
    flat: Vec<f64>,
    hidden: Vec<f64>,
    mask: Vec<f64>,
    dropped: Vec<f64>,
    d_hidden: Vec<f64>,
    d_flat: Vec<f64>,
    g_p2: Vec<f64>,
    g_a2: Vec<f64>,
    g_p1: Vec<f64>,
    g_a1: Vec<f64>,
}

impl Network {
    pub fn new(topology: Topology) -> Result<Self> {
        let shapes = topology.shapes()?;
        Ok(Self {
            topology,
            shapes,
            chunks: Vec::new(),
            col: Vec::new(),
            dcol: Vec::new(),
            flat: Vec::new(),
            hidden: Vec::new(),
            mask: Vec::new(),
            dropped: Vec::new(),
            d_hidden: Vec::new(),
            d_flat: Vec::new(),
            g_p2: Vec::new(),
            g_a2: Vec::new(),
            g_p1: Vec::new(),
            g_a1: Vec::new(),
        })
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    fn check(&self, params: &ModelParams, inputs: &[f64]) -> Result<usize> {
        if params.topology() != &self.topology {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.topology),
                got: format!("{:?}", params.topology()),
            });
        }
        let n = self.topology.input_len();
        if inputs.len() % n != 0 {
            return Err(Error::ShapeMismatch {
                expected: format!("a multiple of {n} input values"),
                got: format!("{}", inputs.len()),
            });
        }
        Ok(inputs.len() / n)
    }

    /// Convolutional part over sample-major patches; fills `self.flat`
    /// with one row per sample and keeps the per-chunk activations.
    fn trunk_batch(&mut self, params: &ModelParams, inputs: &[f64], batch: usize) {
        let topo = self.topology;
        let sh = self.shapes;
        let (n, fl) = (topo.input_len(), sh.flat);
        let per_c = topo.context * topo.bands;
        let q2 = sh.pool2;
        let area = q2.t * q2.f;
        let n_chunks = batch.div_ceil(CONV_CHUNK);
        if self.chunks.len() < n_chunks {
            self.chunks.resize_with(n_chunks, TrunkCache::default);
        }
        self.flat.resize(batch * fl, 0.0);
        for (ci, first) in (0..batch).step_by(CONV_CHUNK).enumerate() {
            let m = CONV_CHUNK.min(batch - first);
            let c = &mut self.chunks[ci];
            c.batch = m;
            c.x.resize(m * n, 0.0);
            for b in 0..m {
                let src = &inputs[(first + b) * n..(first + b + 1) * n];
                for ch in 0..topo.channels {
                    c.x[(ch * m + b) * per_c..(ch * m + b + 1) * per_c]
                        .copy_from_slice(&src[ch * per_c..(ch + 1) * per_c]);
                }
            }
            trunk_forward(&topo, params, sh.input, c, &mut self.col);
            for b in 0..m {
                let row = &mut self.flat[(first + b) * fl..(first + b + 1) * fl];
                for ch in 0..q2.c {
                    let src = (ch * m + b) * area;
                    row[ch * area..(ch + 1) * area].copy_from_slice(&c.p2[src..src + area]);
                }
            }
        }
    }

    /// Dense part: `hidden = relu(flat W3^T + b3)`, returns the logits.
    fn dense_forward(&mut self, params: &ModelParams, batch: usize, logits: &mut [f64]) {
        let (f, h) = (self.shapes.flat, self.shapes.hidden);
        self.hidden.resize(batch * h, 0.0);
        for row in self.hidden.chunks_mut(h) {
            row.copy_from_slice(params.tensor(B3));
        }
        gemm(batch, f, h, &self.flat, false, params.tensor(W3), true, 1.0, &mut self.hidden);
        for v in self.hidden.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let (w4, b4) = (params.tensor(W4), params.tensor(B4)[0]);
        let use_mask = self.mask.len() == batch * h;
        if use_mask {
            self.dropped.resize(batch * h, 0.0);
            for ((d, &x), &m) in self.dropped.iter_mut().zip(&self.hidden).zip(&self.mask) {
                *d = x * m;
            }
        }
        let src = if use_mask { &self.dropped } else { &self.hidden };
        for (l, row) in logits.iter_mut().zip(src.chunks(h)) {
            *l = b4 + row.iter().zip(w4).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Probabilities for a batch of patches laid out back to back.
    pub fn predict(&mut self, params: &ModelParams, inputs: &[f64], out: &mut [f64]) -> Result<()> {
        let batch = self.check(params, inputs)?;
        self.trunk_batch(params, inputs, batch);
        self.mask.clear();
        self.dense_forward(params, batch, &mut out[..batch]);
        for o in out[..batch].iter_mut() {
            *o = sigmoid(*o);
        }
        Ok(())
    }

    /// Probability for every frame of a `channels x len x bands` block, one
    /// per `context`-frame window (so `len - context + 1` values), sharing
    /// the convolutional work between overlapping windows.
    pub fn predict_sequence(
        &mut self,
        params: &ModelParams,
        block: &[f64],
        len: usize,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        self.check(params, &[])?;
        let topo = self.topology;
        let w = topo.context;
        let per_t = topo.channels * topo.bands;
        if len < w || block.len() != per_t * len {
            return Err(Error::ShapeMismatch {
                expected: format!("{} x >= {w} x {} block", topo.channels, topo.bands),
                got: format!("{} values over {len} frames", block.len()),
            });
        }
        let n_out = len - w + 1;
        out.clear();
        if !topo.time_shareable() {
            let mut patch = vec![0.0; topo.input_len()];
            let mut p = [0.0];
            for j in 0..n_out {
                copy_window(block, topo.channels, len, topo.bands, j, w, &mut patch);
                self.predict(params, &patch, &mut p)?;
                out.push(p[0]);
            }
            return Ok(());
        }
        const CHUNK: usize = 256;
        let mut logits = Vec::new();
        let q2 = self.shapes.pool2;
        let fl = self.shapes.flat;
        if self.chunks.is_empty() {
            self.chunks.push(TrunkCache::default());
        }
        let mut start = 0;
        while start < n_out {
            let m = CHUNK.min(n_out - start);
            let l = m + w - 1;
            let c = &mut self.chunks[0];
            c.batch = 1;
            c.x.resize(topo.channels * l * topo.bands, 0.0);
            copy_window(block, topo.channels, len, topo.bands, start, l, &mut c.x);
            let s = Shape3 { c: topo.channels, t: l, f: topo.bands };
            let big = trunk_forward(&topo, params, s, c, &mut self.col);
            debug_assert_eq!(big.t, m + q2.t - 1);
            self.flat.resize(m * fl, 0.0);
            for j in 0..m {
                let dst = &mut self.flat[j * fl..(j + 1) * fl];
                for ch in 0..q2.c {
                    let src = (ch * big.t + j) * q2.f;
                    dst[ch * q2.t * q2.f..(ch + 1) * q2.t * q2.f].copy_from_slice(&c.p2[src..src + q2.t * q2.f]);
                }
            }
            self.mask.clear();
            logits.resize(m, 0.0);
            self.dense_forward(params, m, &mut logits);
            out.extend(logits.iter().map(|&z| sigmoid(z)));
            start += m;
        }
        Ok(())
    }

    /// Mean cross-entropy of a batch; adds its gradient to `grad` (laid out
    /// like [`ModelParams::values`]). With `dropout = Some((p, rng))` the
    /// dense hidden units are dropped as in training.
    pub fn loss_and_gradient<R: Rng + ?Sized>(
        &mut self,
        params: &ModelParams,
        inputs: &[f64],
        targets: &[f64],
        dropout: Option<(f64, &mut R)>,
        grad: &mut [f64],
    ) -> Result<f64> {
        let batch = self.check(params, inputs)?;
        if targets.len() != batch || grad.len() != params.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{batch} targets and {} gradient slots", params.len()),
                got: format!("{} and {}", targets.len(), grad.len()),
            });
        }
        if batch == 0 {
            return Ok(0.0);
        }
        let topo = self.topology;
        let sh = self.shapes;
        let (fl, h) = (sh.flat, sh.hidden);

        self.trunk_batch(params, inputs, batch);
        match dropout {
            Some((p, rng)) if p > 0.0 => {
                check_dropout(p)?;
                self.mask.resize(batch * h, 0.0);
                dropout_mask(&mut self.mask, p, rng);
            }
            Some((p, _)) => {
                check_dropout(p)?;
                self.mask.clear();
            }
            None => self.mask.clear(),
        }
        let mut logits = vec![0.0; batch];
        self.dense_forward(params, batch, &mut logits);

        let (g_w1, rest) = grad.split_at_mut(params.range(B1).start);
        let (g_b1, rest) = rest.split_at_mut(params.range(B1).len());
        let (g_w2, rest) = rest.split_at_mut(params.range(W2).len());
        let (g_b2, rest) = rest.split_at_mut(params.range(B2).len());
        let (g_w3, rest) = rest.split_at_mut(params.range(W3).len());
        let (g_b3, rest) = rest.split_at_mut(params.range(B3).len());
        let (g_w4, g_b4) = rest.split_at_mut(params.range(W4).len());

        let w4 = params.tensor(W4);
        let dropped = !self.mask.is_empty();
        let scale = 1.0 / batch as f64;
        let mut total = 0.0;
        self.d_hidden.resize(batch * h, 0.0);
        for i in 0..batch {
            let p = sigmoid(logits[i]);
            total += loss(p, targets[i]);
            let dz = (p - targets[i]) * scale;
            g_b4[0] += dz;
            let hid = &self.hidden[i * h..(i + 1) * h];
            let dh = &mut self.d_hidden[i * h..(i + 1) * h];
            for u in 0..h {
                let m = if dropped { self.mask[i * h + u] } else { 1.0 };
                g_w4[u] += dz * hid[u] * m;
                dh[u] = if hid[u] > 0.0 { dz * w4[u] * m } else { 0.0 };
            }
        }
        gemm(h, batch, fl, &self.d_hidden, true, &self.flat, false, 1.0, g_w3);
        for row in self.d_hidden.chunks(h) {
            for (g, d) in g_b3.iter_mut().zip(row) {
                *g += d;
            }
        }
        self.d_flat.resize(batch * fl, 0.0);
        gemm(batch, h, fl, &self.d_hidden, false, params.tensor(W3), false, 0.0, &mut self.d_flat);

        let q2 = sh.pool2;
        let area = q2.t * q2.f;
        let k1 = topo.channels * topo.conv1.time * topo.conv1.freq;
        let k2 = sh.pool1.c * topo.conv2.time * topo.conv2.freq;
        for (ci, first) in (0..batch).step_by(CONV_CHUNK).enumerate() {
            let c = &self.chunks[ci];
            let m = c.batch;
            self.g_p2.resize(m * sh.pool2.len(), 0.0);
            for b in 0..m {
                let row = &self.d_flat[(first + b) * fl..(first + b + 1) * fl];
                for ch in 0..q2.c {
                    let dst = (ch * m + b) * area;
                    self.g_p2[dst..dst + area].copy_from_slice(&row[ch * area..(ch + 1) * area]);
                }
            }
            self.g_a2.resize(m * sh.conv2.len(), 0.0);
            maxpool_relu_backward(&self.g_p2, &c.a2, &c.idx2, &mut self.g_a2);
            let n2 = m * sh.conv2.t * sh.conv2.f;
            self.col.resize((k1 * sh.conv1.t * sh.conv1.f * m).max(k2 * n2), 0.0);
            self.dcol.resize(k2 * n2, 0.0);
            im2col(&c.p1, m, sh.pool1, topo.conv2, &mut self.col);
            self.g_p1.clear();
            self.g_p1.resize(m * sh.pool1.len(), 0.0);
            conv_backward(
                &self.g_a2,
                m,
                sh.pool1,
                topo.conv2,
                params.tensor(W2),
                &self.col,
                g_w2,
                g_b2,
                Some((&mut self.g_p1, &mut self.dcol)),
            );
            self.g_a1.resize(m * sh.conv1.len(), 0.0);
            maxpool_relu_backward(&self.g_p1, &c.a1, &c.idx1, &mut self.g_a1);
            im2col(&c.x, m, sh.input, topo.conv1, &mut self.col);
            conv_backward(&self.g_a1, m, sh.input, topo.conv1, params.tensor(W1), &self.col, g_w1, g_b1, None);
        }
        Ok(total * scale)
    }
}

/// Copies frames `start..start + len` of every channel of a
/// `channels x total x bands` block into `dst`.
fn copy_window(block: &[f64], channels: usize, total: usize, bands: usize, start: usize, len: usize, dst: &mut [f64]) {
    for c in 0..channels {
        let src = (c * total + start) * bands;
        dst[c * len * bands..(c + 1) * len * bands].copy_from_slice(&block[src..src + len * bands]);
    }
}

/// Probability for one `channels x context x bands` patch, without
/// dropout or input noise.
/// Runs one patch through the network and lists each activation it
/// produced, from input to output, with its dimensions (the product of the
/// dimensions is the length of the buffer actually written).
pub fn trace_shapes(params: &ModelParams, patch: &[f64]) -> Result<Vec<(&'static str, Vec<usize>)>> {
    let topo = *params.topology();
    let mut net = Network::new(topo)?;
    let mut out = [0.0];
    net.predict(params, patch, &mut out)?;
    let sh = net.shapes;
    let c = &net.chunks[0];
    let dims = |s: Shape3, len: usize| {
        debug_assert_eq!(s.len(), len);
        vec![s.c, s.t, s.f]
    };
    Ok(vec![
        ("input", dims(sh.input, c.x.len())),
        ("conv1", dims(sh.conv1, c.a1.len())),
        ("pool1", dims(sh.pool1, c.p1.len())),
        ("conv2", dims(sh.conv2, c.a2.len())),
        ("pool2", dims(sh.pool2, c.p2.len())),
        ("flatten", vec![net.flat.len()]),
        ("dense", vec![net.hidden.len()]),
        ("output", vec![out.len()]),
    ])
}

pub fn forward(params: &ModelParams, patch: &[f64]) -> Result<f64> {
    let topo = *params.topology();
    if patch.len() != topo.input_len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} x {} x {} patch", topo.channels, topo.context, topo.bands),
            got: format!("{} values", patch.len()),
        });
    }
    let mut net = Network::new(topo)?;
    let mut out = [0.0];
    net.predict(params, patch, &mut out)?;
    Ok(out[0])
}
