//! Forward and backward kernels for every layer kind.
//!
//! Image tensors are NHWC. Recurrent tensors are "packed": the valid frames
//! of every sample laid out back to back (`[sum(lengths), D]`), sample-major.
//! Padding never enters a kernel, so masked steps cannot influence outputs.

use crate::error::{Error, Result};
use crate::scalar::{c, Scalar};
use crate::tensor::Tensor;

fn nhwc(t: &Tensor<impl Scalar>, what: &str) -> Result<(usize, usize, usize, usize)> {
    match t.shape() {
        [n, h, w, ch] => Ok((*n, *h, *w, *ch)),
        s => Err(Error::shape(what, format!("expected NHWC tensor, got {s:?}"))),
    }
}

/// 3x3 convolution, stride 1, zero "same" padding.
/// `x: [N, H, W, Ci]`, `w: [3, 3, Ci, Co]`, `b: [Co]`.
pub fn conv3x3_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, h, wd, ci) = nhwc(x, "conv3x3")?;
    let co = match w.shape() {
        [3, 3, i, o] if *i == ci => *o,
        s => return Err(Error::shape("conv3x3", format!("weight {s:?} incompatible with {ci} input channels"))),
    };
    if b.shape() != [co] {
        return Err(Error::shape("conv3x3", format!("bias {:?}, expected [{co}]", b.shape())));
    }
    let xs = x.data();
    let ws = w.data();
    let mut out = vec![T::zero(); n * h * wd * co];
    for img in 0..n {
        for y in 0..h {
            for xx in 0..wd {
                let o = ((img * h + y) * wd + xx) * co;
                let acc = &mut out[o..o + co];
                acc.copy_from_slice(b.data());
                for ky in 0..3 {
                    let iy = y as isize + ky as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = xx as isize + kx as isize - 1;
                        if ix < 0 || ix >= wd as isize {
                            continue;
                        }
                        let p = ((img * h + iy as usize) * wd + ix as usize) * ci;
                        for (k, &v) in xs[p..p + ci].iter().enumerate() {
                            if v == T::zero() {
                                continue;
                            }
                            let wo = ((ky * 3 + kx) * ci + k) * co;
                            for (a, &wv) in acc.iter_mut().zip(&ws[wo..wo + co]) {
                                *a += v * wv;
                            }
                        }
                    }
                }
            }
        }
    }
    Tensor::from_vec(&[n, h, wd, co], out)
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn conv3x3_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_y: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, h, wd, ci) = nhwc(x, "conv3x3")?;
    let co = w.shape()[3];
    if grad_y.shape() != [n, h, wd, co] {
        return Err(Error::shape("conv3x3", format!("grad {:?} vs output [{n}, {h}, {wd}, {co}]", grad_y.shape())));
    }
    let xs = x.data();
    let ws = w.data();
    let gys = grad_y.data();
    let mut gx = vec![T::zero(); xs.len()];
    let mut gw = vec![T::zero(); ws.len()];
    let mut gb = vec![T::zero(); co];
    for img in 0..n {
        for y in 0..h {
            for xx in 0..wd {
                let o = ((img * h + y) * wd + xx) * co;
                let g = &gys[o..o + co];
                for (a, &v) in gb.iter_mut().zip(g) {
                    *a += v;
                }
                for ky in 0..3 {
                    let iy = y as isize + ky as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let ix = xx as isize + kx as isize - 1;
                        if ix < 0 || ix >= wd as isize {
                            continue;
                        }
                        let p = ((img * h + iy as usize) * wd + ix as usize) * ci;
                        for k in 0..ci {
                            let wo = ((ky * 3 + kx) * ci + k) * co;
                            let v = xs[p + k];
                            let mut dot = T::zero();
                            for ((gwv, &wv), &gv) in gw[wo..wo + co].iter_mut().zip(&ws[wo..wo + co]).zip(g) {
                                *gwv += v * gv;
                                dot += wv * gv;
                            }
                            gx[p + k] += dot;
                        }
                    }
                }
            }
        }
    }
    Ok((
        Tensor::from_vec(x.shape(), gx)?,
        Tensor::from_vec(w.shape(), gw)?,
        Tensor::from_vec(&[co], gb)?,
    ))
}

/// 2x2 max pooling, stride 2, output size `floor(H/2) x floor(W/2)`.
/// Returns the output and, per output element, the flat index of its argmax.
pub fn maxpool2x2_forward<T: Scalar>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let (n, h, w, ch) = nhwc(x, "maxpool2x2")?;
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(Error::shape("maxpool2x2", format!("input {h}x{w} too small to pool")));
    }
    let xs = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * ch);
    let mut arg = Vec::with_capacity(n * oh * ow * ch);
    for img in 0..n {
        for y in 0..oh {
            for xx in 0..ow {
                for k in 0..ch {
                    let mut best_i = ((img * h + 2 * y) * w + 2 * xx) * ch + k;
                    let mut best = xs[best_i];
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = ((img * h + 2 * y + dy) * w + 2 * xx + dx) * ch + k;
                        if xs[i] > best {
                            best = xs[i];
                            best_i = i;
                        }
                    }
                    out.push(best);
                    arg.push(best_i);
                }
            }
        }
    }
    Ok((Tensor::from_vec(&[n, oh, ow, ch], out)?, arg))
}

pub fn maxpool2x2_backward<T: Scalar>(input_shape: &[usize], argmax: &[usize], grad_y: &Tensor<T>) -> Result<Tensor<T>> {
    if grad_y.len() != argmax.len() {
        return Err(Error::shape("maxpool2x2", "gradient size does not match forward output"));
    }
    let mut gx = Tensor::zeros(input_shape);
    let g = gx.data_mut();
    for (&i, &v) in argmax.iter().zip(grad_y.data()) {
        g[i] += v;
    }
    Ok(gx)
}

/// Fully connected layer: `x: [N, D]`, `w: [D, O]`, `b: [O]`.
pub fn dense_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, d) = match x.shape() {
        [n, d] => (*n, *d),
        s => return Err(Error::shape("dense", format!("expected [N, D] input, got {s:?}"))),
    };
    let o = match w.shape() {
        [wd, o] if *wd == d => *o,
        s => return Err(Error::shape("dense", format!("weight {s:?} incompatible with input width {d}"))),
    };
    if b.shape() != [o] {
        return Err(Error::shape("dense", format!("bias {:?}, expected [{o}]", b.shape())));
    }
    let ws = w.data();
    let mut out = Vec::with_capacity(n * o);
    for r in 0..n {
        let mut acc = b.data().to_vec();
        for (k, &v) in x.row(r).iter().enumerate() {
            if v == T::zero() {
                continue;
            }
            for (a, &wv) in acc.iter_mut().zip(&ws[k * o..(k + 1) * o]) {
                *a += v * wv;
            }
        }
        out.extend_from_slice(&acc);
    }
    Tensor::from_vec(&[n, o], out)
}

/// Returns `(grad_x, grad_w, grad_b)`.
pub fn dense_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_y: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>)> {
    let (n, d) = (x.rows(), x.row_len());
    let o = w.shape()[1];
    if grad_y.shape() != [n, o] {
        return Err(Error::shape("dense", format!("grad {:?} vs output [{n}, {o}]", grad_y.shape())));
    }
    let ws = w.data();
    let mut gx = Vec::with_capacity(n * d);
    let mut gw = vec![T::zero(); d * o];
    let mut gb = vec![T::zero(); o];
    for r in 0..n {
        let g = grad_y.row(r);
        for (a, &v) in gb.iter_mut().zip(g) {
            *a += v;
        }
        for (k, &v) in x.row(r).iter().enumerate() {
            let wrow = &ws[k * o..(k + 1) * o];
            let mut dot = T::zero();
            for ((gwv, &wv), &gv) in gw[k * o..(k + 1) * o].iter_mut().zip(wrow).zip(g) {
                *gwv += v * gv;
                dot += wv * gv;
            }
            gx.push(dot);
        }
    }
    Ok((
        Tensor::from_vec(&[n, d], gx)?,
        Tensor::from_vec(&[d, o], gw)?,
        Tensor::from_vec(&[o], gb)?,
    ))
}

pub fn relu_forward<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Gradient through ReLU given its *output*.
pub fn relu_backward<T: Scalar>(y: &Tensor<T>, grad_y: &Tensor<T>) -> Tensor<T> {
    let data = y
        .data()
        .iter()
        .zip(grad_y.data())
        .map(|(&yv, &g)| if yv > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::from_vec(y.shape(), data).expect("same shape")
}

#[inline]
fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Everything the LSTM backward pass needs.
#[derive(Clone, Debug)]
pub struct LstmCache<T> {
    /// Post-activation gates `[rows, 4H]` in order i, f, g, o.
    pub gates: Tensor<T>,
    /// Cell states `[rows, H]`.
    pub cells: Tensor<T>,
    /// Hidden outputs `[rows, H]`.
    pub hidden: Tensor<T>,
}

fn lstm_dims<T: Scalar>(x: &Tensor<T>, w_x: &Tensor<T>, w_h: &Tensor<T>, b: &Tensor<T>, lengths: &[usize]) -> Result<(usize, usize)> {
    let d = match x.shape() {
        [_, d] => *d,
        s => return Err(Error::shape("lstm", format!("expected packed [rows, D] input, got {s:?}"))),
    };
    let h4 = match w_x.shape() {
        [wd, h4] if *wd == d && h4 % 4 == 0 => *h4,
        s => return Err(Error::shape("lstm", format!("input weight {s:?} incompatible with width {d}"))),
    };
    let h = h4 / 4;
    if w_h.shape() != [h, h4] || b.shape() != [h4] {
        return Err(Error::shape("lstm", format!("recurrent weight {:?} / bias {:?} for hidden {h}", w_h.shape(), b.shape())));
    }
    if lengths.iter().sum::<usize>() != x.rows() {
        return Err(Error::shape("lstm", format!("lengths sum {} but {} packed rows", lengths.iter().sum::<usize>(), x.rows())));
    }
    if lengths.contains(&0) {
        return Err(Error::shape("lstm", "every sequence needs at least one valid step"));
    }
    Ok((d, h))
}

/// Single-layer LSTM over packed sequences, zero initial state.
/// `w_x: [D, 4H]`, `w_h: [H, 4H]`, `b: [4H]`; gate order i, f, g, o.
pub fn lstm_forward<T: Scalar>(
    x: &Tensor<T>,
    w_x: &Tensor<T>,
    w_h: &Tensor<T>,
    b: &Tensor<T>,
    lengths: &[usize],
) -> Result<LstmCache<T>> {
    let (_, h) = lstm_dims(x, w_x, w_h, b, lengths)?;
    let h4 = 4 * h;
    let rows = x.rows();
    // input projection for all rows at once
    let zx = dense_forward(x, w_x, b)?;
    let whs = w_h.data();
    let mut gates = vec![T::zero(); rows * h4];
    let mut cells = vec![T::zero(); rows * h];
    let mut hidden = vec![T::zero(); rows * h];
    let mut start = 0;
    for &len in lengths {
        for t in 0..len {
            let r = start + t;
            let mut z = zx.row(r).to_vec();
            if t > 0 {
                let hp = &hidden[(r - 1) * h..r * h];
                for (k, &hv) in hp.iter().enumerate() {
                    if hv == T::zero() {
                        continue;
                    }
                    for (a, &wv) in z.iter_mut().zip(&whs[k * h4..(k + 1) * h4]) {
                        *a += hv * wv;
                    }
                }
            }
            let gr = &mut gates[r * h4..(r + 1) * h4];
            for j in 0..h {
                gr[j] = sigmoid(z[j]);
                gr[h + j] = sigmoid(z[h + j]);
                gr[2 * h + j] = z[2 * h + j].tanh();
                gr[3 * h + j] = sigmoid(z[3 * h + j]);
            }
            for j in 0..h {
                let c_prev = if t > 0 { cells[(r - 1) * h + j] } else { T::zero() };
                let cv = gr[h + j] * c_prev + gr[j] * gr[2 * h + j];
                cells[r * h + j] = cv;
                hidden[r * h + j] = gr[3 * h + j] * cv.tanh();
            }
        }
        start += len;
    }
    Ok(LstmCache {
        gates: Tensor::from_vec(&[rows, h4], gates)?,
        cells: Tensor::from_vec(&[rows, h], cells)?,
        hidden: Tensor::from_vec(&[rows, h], hidden)?,
    })
}

/// Backpropagation through time. Returns `(grad_x, grad_w_x, grad_w_h, grad_b)`.
pub fn lstm_backward<T: Scalar>(
    x: &Tensor<T>,
    w_x: &Tensor<T>,
    w_h: &Tensor<T>,
    cache: &LstmCache<T>,
    lengths: &[usize],
    grad_hidden: &Tensor<T>,
) -> Result<(Tensor<T>, Tensor<T>, Tensor<T>, Tensor<T>)> {
    let h = w_h.shape()[0];
    let h4 = 4 * h;
    let rows = x.rows();
    if grad_hidden.shape() != [rows, h] {
        return Err(Error::shape("lstm", format!("grad {:?} vs output [{rows}, {h}]", grad_hidden.shape())));
    }
    let whs = w_h.data();
    let gates = cache.gates.data();
    let cells = cache.cells.data();
    let hidden = cache.hidden.data();
    let mut dz_all = vec![T::zero(); rows * h4];
    let mut gw_h = vec![T::zero(); h * h4];
    let mut start = 0;
    for &len in lengths {
        let mut dh_next = vec![T::zero(); h];
        let mut dc_next = vec![T::zero(); h];
        for t in (0..len).rev() {
            let r = start + t;
            let gr = &gates[r * h4..(r + 1) * h4];
            let dz = &mut dz_all[r * h4..(r + 1) * h4];
            for j in 0..h {
                let (i, f, g, o) = (gr[j], gr[h + j], gr[2 * h + j], gr[3 * h + j]);
                let cv = cells[r * h + j];
                let tc = cv.tanh();
                let dh = grad_hidden.data()[r * h + j] + dh_next[j];
                let d_o = dh * tc;
                let dc = dh * o * (T::one() - tc * tc) + dc_next[j];
                let c_prev = if t > 0 { cells[(r - 1) * h + j] } else { T::zero() };
                let di = dc * g;
                let dg = dc * i;
                let df = dc * c_prev;
                dc_next[j] = dc * f;
                dz[j] = di * i * (T::one() - i);
                dz[h + j] = df * f * (T::one() - f);
                dz[2 * h + j] = dg * (T::one() - g * g);
                dz[3 * h + j] = d_o * o * (T::one() - o);
            }
            // recurrent contributions
            for k in 0..h {
                let wrow = &whs[k * h4..(k + 1) * h4];
                let mut dot = T::zero();
                for (&wv, &dv) in wrow.iter().zip(dz.iter()) {
                    dot += wv * dv;
                }
                dh_next[k] = dot;
                if t > 0 {
                    let hv = hidden[(r - 1) * h + k];
                    if hv != T::zero() {
                        for (gw, &dv) in gw_h[k * h4..(k + 1) * h4].iter_mut().zip(dz.iter()) {
                            *gw += hv * dv;
                        }
                    }
                }
            }
        }
        start += len;
    }
    let dz = Tensor::from_vec(&[rows, h4], dz_all)?;
    let (gx, gw_x, gb) = dense_backward(x, w_x, &dz)?;
    Ok((gx, gw_x, Tensor::from_vec(&[h, h4], gw_h)?, gb))
}

/// Pick each sequence's last valid row from a packed tensor: `[sum(len), H] -> [B, H]`.
pub fn last_step_forward<T: Scalar>(x: &Tensor<T>, lengths: &[usize]) -> Result<Tensor<T>> {
    if lengths.iter().sum::<usize>() != x.rows() || lengths.contains(&0) {
        return Err(Error::shape("last_step", "lengths do not match packed rows"));
    }
    let mut rows = Vec::with_capacity(lengths.len());
    let mut end = 0;
    for &len in lengths {
        end += len;
        rows.push(x.row(end - 1));
    }
    Tensor::stack(&rows, &x.shape()[1..])
}

pub fn last_step_backward<T: Scalar>(n_rows: usize, lengths: &[usize], grad_y: &Tensor<T>) -> Result<Tensor<T>> {
    let w = grad_y.row_len();
    let mut gx = Tensor::zeros(&[n_rows, w]);
    let mut end = 0;
    for (b, &len) in lengths.iter().enumerate() {
        end += len;
        gx.row_mut(end - 1).copy_from_slice(grad_y.row(b));
    }
    Ok(gx)
}

/// Concatenate `[B, D_i]` tensors along the feature axis.
pub fn concat_forward<T: Scalar>(parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let b = parts.first().map(|p| p.rows()).unwrap_or(0);
    if parts.iter().any(|p| p.shape().len() != 2 || p.rows() != b) {
        return Err(Error::shape("concat", "all parts must be [B, D] with equal B"));
    }
    let width: usize = parts.iter().map(|p| p.row_len()).sum();
    let mut data = Vec::with_capacity(b * width);
    for r in 0..b {
        for p in parts {
            data.extend_from_slice(p.row(r));
        }
    }
    Tensor::from_vec(&[b, width], data)
}

pub fn concat_backward<T: Scalar>(widths: &[usize], grad_y: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
    let b = grad_y.rows();
    if widths.iter().sum::<usize>() != grad_y.row_len() {
        return Err(Error::shape("concat", "widths do not sum to gradient width"));
    }
    let mut parts: Vec<Vec<T>> = widths.iter().map(|&w| Vec::with_capacity(b * w)).collect();
    for r in 0..b {
        let row = grad_y.row(r);
        let mut off = 0;
        for (p, &w) in parts.iter_mut().zip(widths) {
            p.extend_from_slice(&row[off..off + w]);
            off += w;
        }
    }
    parts
        .into_iter()
        .zip(widths)
        .map(|(p, &w)| Tensor::from_vec(&[b, w], p))
        .collect()
}

/// Row-wise softmax.
pub fn softmax<T: Scalar>(logits: &Tensor<T>) -> Tensor<T> {
    let mut out = logits.clone();
    let k = out.row_len();
    if k == 0 {
        return out;
    }
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let mut s = T::zero();
        for v in row.iter_mut() {
            *v = (*v - m).exp();
            s += *v;
        }
        for v in row.iter_mut() {
            *v /= s;
        }
    }
    out
}

/// Mean categorical cross-entropy over rows and its gradient w.r.t. the logits.
/// Returns `(loss, probabilities, grad_logits)`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, targets: &[usize]) -> Result<(T, Tensor<T>, Tensor<T>)> {
    let (n, k) = (logits.rows(), logits.row_len());
    if targets.len() != n || targets.iter().any(|&t| t >= k) {
        return Err(Error::Invalid("targets do not match logits".into()));
    }
    let probs = softmax(logits);
    let inv_n = T::one() / T::from_usize_lossy(n);
    let mut loss = T::zero();
    let mut grad = probs.clone();
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let m = row.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = m + row.iter().map(|&v| (v - m).exp()).sum::<T>().ln();
        loss += lse - row[t];
        let g = grad.row_mut(r);
        g[t] -= T::one();
        for v in g.iter_mut() {
            *v *= inv_n;
        }
    }
    Ok((loss * inv_n, probs, grad))
}

/// Uniform value in `[-limit, limit]` scaled for a fan-in.
pub(crate) fn fan_in_limit<T: Scalar>(fan_in: usize, gain: f64) -> T {
    c::<T>((gain / fan_in.max(1) as f64).sqrt())
}
