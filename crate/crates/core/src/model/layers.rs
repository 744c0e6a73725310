//! Building blocks of the detector: im2col convolutions on top of a GEMM
//! kernel, max pooling with recorded winners, and the output nonlinearity.

use super::topology::{ConvSpec, PoolSpec, Shape3};

/// `C = alpha * op(A) * op(B) + beta * C` on row-major buffers, where `ta`
/// / `tb` select the transposed operand. `A` is `m x k` after `op`, `B` is
/// `k x n`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(m: usize, k: usize, n: usize, a: &[f64], ta: bool, b: &[f64], tb: bool, beta: f64, c: &mut [f64]) {
    if m == 0 || n == 0 {
        return;
    }
    let (rsa, csa) = if ta { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if tb { (1, k as isize) } else { (n as isize, 1) };
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the asserts above bound every index the strides can reach.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub(crate) fn conv_out_shape(input: Shape3, spec: ConvSpec) -> Shape3 {
    Shape3 { c: spec.filters, t: input.t + 1 - spec.time, f: input.f + 1 - spec.freq }
}

/// Unfolds a `[in_channel][batch][time][freq]` block so that row
/// `(ci, dt, df)` column `(b, t, f)` holds `input[ci][b][t + dt][f + df]`.
pub(crate) fn im2col(input: &[f64], batch: usize, s: Shape3, spec: ConvSpec, col: &mut [f64]) {
    let o = conv_out_shape(s, spec);
    let n = batch * o.t * o.f;
    let mut r = 0;
    for ci in 0..s.c {
        for dt in 0..spec.time {
            for df in 0..spec.freq {
                let row = &mut col[r * n..(r + 1) * n];
                for b in 0..batch {
                    for t in 0..o.t {
                        let src = ((ci * batch + b) * s.t + t + dt) * s.f + df;
                        let dst = (b * o.t + t) * o.f;
                        row[dst..dst + o.f].copy_from_slice(&input[src..src + o.f]);
                    }
                }
                r += 1;
            }
        }
    }
}

/// Adds each column entry back onto the input position it was copied from.
pub(crate) fn col2im_add(col: &[f64], batch: usize, s: Shape3, spec: ConvSpec, input: &mut [f64]) {
    let o = conv_out_shape(s, spec);
    let n = batch * o.t * o.f;
    let mut r = 0;
    for ci in 0..s.c {
        for dt in 0..spec.time {
            for df in 0..spec.freq {
                let row = &col[r * n..(r + 1) * n];
                for b in 0..batch {
                    for t in 0..o.t {
                        let dst = ((ci * batch + b) * s.t + t + dt) * s.f + df;
                        let src = (b * o.t + t) * o.f;
                        for (d, v) in input[dst..dst + o.f].iter_mut().zip(&row[src..src + o.f]) {
                            *d += v;
                        }
                    }
                }
                r += 1;
            }
        }
    }
}

/// Valid convolution followed by ReLU over a batch, `[c][b][t][f]` in and
/// out. `col` must hold `in_channels * time * freq * batch * out_positions`
/// values.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_relu_forward(
    input: &[f64],
    batch: usize,
    s: Shape3,
    spec: ConvSpec,
    w: &[f64],
    b: &[f64],
    col: &mut [f64],
    out: &mut [f64],
) {
    let o = conv_out_shape(s, spec);
    let n = batch * o.t * o.f;
    let k = s.c * spec.time * spec.freq;
    im2col(input, batch, s, spec, col);
    for (row, &bias) in out.chunks_mut(n).zip(b) {
        row.fill(bias);
    }
    gemm(spec.filters, k, n, w, false, col, false, 1.0, out);
    for v in out[..spec.filters * n].iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Accumulates weight and bias gradients of a convolution given the
/// gradient at its (pre-activation) output and the unfolded input; when
/// `dinput` is given, adds the input gradient to it.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    grad_out: &[f64],
    batch: usize,
    s: Shape3,
    spec: ConvSpec,
    w: &[f64],
    col: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dinput: Option<(&mut [f64], &mut [f64])>,
) {
    let o = conv_out_shape(s, spec);
    let n = batch * o.t * o.f;
    let k = s.c * spec.time * spec.freq;
    gemm(spec.filters, n, k, grad_out, false, col, true, 1.0, dw);
    for (d, row) in db.iter_mut().zip(grad_out.chunks(n)) {
        *d += row.iter().sum::<f64>();
    }
    if let Some((dinput, dcol)) = dinput {
        gemm(k, spec.filters, n, w, true, grad_out, false, 0.0, dcol);
        col2im_add(dcol, batch, s, spec, dinput);
    }
}

/// Max pooling over non-overlapping blocks of each `[c][b]` map (leftover
/// edge cells are dropped); `winners` receives the input index of each
/// maximum.
pub(crate) fn maxpool_forward(
    input: &[f64],
    batch: usize,
    s: Shape3,
    spec: PoolSpec,
    out: &mut [f64],
    winners: &mut [u32],
) {
    let (to, fo) = (s.t / spec.time, s.f / spec.freq);
    let mut i = 0;
    for m in 0..s.c * batch {
        for t in 0..to {
            for f in 0..fo {
                let mut best = usize::MAX;
                let mut bv = f64::NEG_INFINITY;
                for dt in 0..spec.time {
                    let base = (m * s.t + t * spec.time + dt) * s.f + f * spec.freq;
                    for (j, &v) in input[base..base + spec.freq].iter().enumerate() {
                        if v > bv {
                            bv = v;
                            best = base + j;
                        }
                    }
                }
                out[i] = bv;
                winners[i] = best as u32;
                i += 1;
            }
        }
    }
}

/// Routes pooled gradients to the winning positions, through the ReLU of
/// the pooled activation: cells whose winner was clamped at zero pass nothing.
pub(crate) fn maxpool_relu_backward(grad: &[f64], activ: &[f64], winners: &[u32], dinput: &mut [f64]) {
    dinput.fill(0.0);
    for (&g, &w) in grad.iter().zip(winners) {
        let w = w as usize;
        if activ[w] > 0.0 {
            dinput[w] += g;
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// Predictions are clamped to this distance from 0 and 1 inside the loss.
pub const LOSS_EPSILON: f64 = 1e-7;

/// Binary cross-entropy `-[y ln p + (1 - y) ln(1 - p)]`.
pub fn loss(pred: f64, target: f64) -> f64 {
    let p = pred.clamp(LOSS_EPSILON, 1.0 - LOSS_EPSILON);
    -(target * libm::log(p) + (1.0 - target) * libm::log(1.0 - p))
}
