//! Differentiable layer operations with hand-derived gradients.
//!
//! Each operation comes as a `forward` / `backward` pair. Backward
//! functions *accumulate* (`+=`) into the gradient buffers they are given,
//! so summing gradients over a batch falls out naturally; callers zero the
//! buffers between optimizer steps.
//!
//! Conventions fixed here (and relied on by the serialized model format):
//!
//! - Convolution is cross-correlation (no kernel flip) with valid padding:
//!   an `L x Cin` input and `K x Cin x W` kernels produce `(L-W+1) x K`.
//! - Flattening is row-major, matching [`Tensor`] storage.
//! - Dropout is *inverted*: surviving activations are scaled by
//!   `1/(1-rate)` at train time so evaluation is an exact identity.
//! - Initialization is Glorot-uniform, `U(-b, b)` with
//!   `b = sqrt(6/(fan_in+fan_out))`.

use crate::error::{Error, Result};
use crate::nn::rng::RngStream;
use crate::nn::tensor::Tensor;

/// Forward-pass mode: training enables dropout, evaluation disables it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Stochastic regularization active.
    Train,
    /// Deterministic inference; dropout is an exact identity.
    Eval,
}

/// Dot product with four independent accumulators.
///
/// The fixed summation order makes results reproducible run to run while
/// still breaking the serial dependency chain that would otherwise
/// throttle the hot loops.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    let (mut s0, mut s1, mut s2, mut s3) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (pa, pb) in (&mut ca).zip(&mut cb) {
        s0 += pa[0] * pb[0];
        s1 += pa[1] * pb[1];
        s2 += pa[2] * pb[2];
        s3 += pa[3] * pb[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// `y += alpha * x`, element-wise.
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * *xi;
    }
}

/// Valid cross-correlation of an `L x Cin` input with `K x Cin x W`
/// kernels plus a `K` bias, producing `(L-W+1) x K`.
///
/// `out[i, k] = bias[k] + sum over (c, w) of input[i+w, c] * kernels[k, c, w]`.
pub fn conv1d(input: &Tensor, kernels: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (l, cin) = match input.shape() {
        [l, c] => (*l, *c),
        s => {
            return Err(Error::Shape(format!(
                "conv1d input must be rank 2, got {s:?}"
            )))
        }
    };
    let (k, kc, w) = match kernels.shape() {
        [k, c, w] => (*k, *c, *w),
        s => {
            return Err(Error::Shape(format!(
                "conv1d kernels must be rank 3, got {s:?}"
            )))
        }
    };
    if kc != cin {
        return Err(Error::Shape(format!(
            "conv1d channel mismatch: input has {cin}, kernels have {kc}"
        )));
    }
    if bias.shape() != [k] {
        return Err(Error::Shape(format!(
            "conv1d bias must have shape [{k}], got {:?}",
            bias.shape()
        )));
    }
    if l < w {
        return Err(Error::Shape(format!(
            "conv1d input length {l} is shorter than kernel width {w}"
        )));
    }

    let out_len = l - w + 1;
    let mut out = Tensor::zeros(&[out_len, k]);
    for i in 0..out_len {
        for kk in 0..k {
            let mut acc = bias.at1(kk);
            for c in 0..cin {
                for ww in 0..w {
                    acc += input.at2(i + ww, c) * kernels.at3(kk, c, ww);
                }
            }
            out.set2(i, kk, acc);
        }
    }
    Ok(out)
}

/// Backward pass of [`conv1d`]; accumulates into all three gradients.
pub fn conv1d_backward(
    input: &Tensor,
    kernels: &Tensor,
    d_out: &Tensor,
    d_input: &mut Tensor,
    d_kernels: &mut Tensor,
    d_bias: &mut Tensor,
) -> Result<()> {
    let (l, cin) = match input.shape() {
        [l, c] => (*l, *c),
        s => {
            return Err(Error::Shape(format!(
                "conv1d input must be rank 2, got {s:?}"
            )))
        }
    };
    let (k, _, w) = match kernels.shape() {
        [k, c, w] if *c == cin => (*k, *c, *w),
        s => return Err(Error::Shape(format!("conv1d kernels incompatible: {s:?}"))),
    };
    let out_len = l - w + 1;
    if d_out.shape() != [out_len, k] {
        return Err(Error::Shape(format!(
            "conv1d upstream gradient must be [{out_len}, {k}], got {:?}",
            d_out.shape()
        )));
    }
    if d_input.shape() != input.shape()
        || d_kernels.shape() != kernels.shape()
        || d_bias.shape() != [k]
    {
        return Err(Error::Shape(
            "conv1d gradient buffer shapes disagree".into(),
        ));
    }

    for i in 0..out_len {
        for kk in 0..k {
            let g = d_out.at2(i, kk);
            if g == 0.0 {
                continue;
            }
            d_bias.data_mut()[kk] += g;
            for c in 0..cin {
                for ww in 0..w {
                    let di = (i + ww) * cin + c;
                    let dk = (kk * cin + c) * w + ww;
                    d_input.data_mut()[di] += g * kernels.at3(kk, c, ww);
                    d_kernels.data_mut()[dk] += g * input.at2(i + ww, c);
                }
            }
        }
    }
    Ok(())
}

/// Fully connected layer: `out[j] = bias[j] + sum_i weights[j, i] * input[i]`
/// with `weights` of shape `O x D`.
pub fn dense(input: &Tensor, weights: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let d = match input.shape() {
        [d] => *d,
        s => {
            return Err(Error::Shape(format!(
                "dense input must be rank 1, got {s:?}"
            )))
        }
    };
    let (o, wd) = match weights.shape() {
        [o, wd] => (*o, *wd),
        s => {
            return Err(Error::Shape(format!(
                "dense weights must be rank 2, got {s:?}"
            )))
        }
    };
    if wd != d {
        return Err(Error::Shape(format!(
            "dense shape mismatch: weights expect input {wd}, got {d}"
        )));
    }
    if bias.shape() != [o] {
        return Err(Error::Shape(format!(
            "dense bias must have shape [{o}], got {:?}",
            bias.shape()
        )));
    }
    let mut out = Tensor::zeros(&[o]);
    for j in 0..o {
        out.data_mut()[j] = bias.at1(j) + dot(weights.row(j), input.data());
    }
    Ok(out)
}

/// Backward pass of [`dense`]; accumulates into all three gradients.
pub fn dense_backward(
    input: &Tensor,
    weights: &Tensor,
    d_out: &Tensor,
    d_input: &mut Tensor,
    d_weights: &mut Tensor,
    d_bias: &mut Tensor,
) -> Result<()> {
    let (o, d) = match weights.shape() {
        [o, d] => (*o, *d),
        s => {
            return Err(Error::Shape(format!(
                "dense weights must be rank 2, got {s:?}"
            )))
        }
    };
    if input.shape() != [d] || d_out.shape() != [o] {
        return Err(Error::Shape(format!(
            "dense backward shapes disagree: input {:?}, upstream {:?}, weights {:?}",
            input.shape(),
            d_out.shape(),
            weights.shape()
        )));
    }
    if d_input.shape() != [d] || d_weights.shape() != [o, d] || d_bias.shape() != [o] {
        return Err(Error::Shape("dense gradient buffer shapes disagree".into()));
    }
    for j in 0..o {
        let g = d_out.at1(j);
        d_bias.data_mut()[j] += g;
        axpy(g, input.data(), d_weights.row_mut(j));
        axpy(g, weights.row(j), d_input.data_mut());
    }
    Ok(())
}

/// Element-wise rectifier `max(0, v)`.
pub fn relu(input: &Tensor) -> Tensor {
    let mut out = input.clone();
    out.data_mut().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0;
        }
    });
    out
}

/// Backward pass of [`relu`]: passes upstream gradient where the *input*
/// was strictly positive (subgradient at exactly 0 is 0).
pub fn relu_backward(input: &Tensor, d_out: &Tensor, d_input: &mut Tensor) -> Result<()> {
    if input.shape() != d_out.shape() || input.shape() != d_input.shape() {
        return Err(Error::Shape("relu backward shapes disagree".into()));
    }
    for ((di, &x), &g) in d_input
        .data_mut()
        .iter_mut()
        .zip(input.data())
        .zip(d_out.data())
    {
        if x > 0.0 {
            *di += g;
        }
    }
    Ok(())
}

/// Multiplicative mask captured by a training-mode dropout pass, reused by
/// its backward pass. `None` marks an evaluation-mode (identity) pass.
#[derive(Debug, Clone)]
pub struct DropoutMask {
    factors: Option<Vec<f64>>,
}

impl DropoutMask {
    /// True when this mask represents the evaluation-mode identity.
    pub fn is_identity(&self) -> bool {
        self.factors.is_none()
    }

    /// Fraction of elements kept (1.0 for an identity mask).
    pub fn keep_fraction(&self) -> f64 {
        match &self.factors {
            None => 1.0,
            Some(f) if f.is_empty() => 1.0,
            Some(f) => f.iter().filter(|&&v| v != 0.0).count() as f64 / f.len() as f64,
        }
    }
}

/// Inverted dropout.
///
/// Training mode zeroes each element independently with probability
/// `rate` (one draw per element, in row-major order) and scales survivors
/// by `1/(1-rate)`; evaluation mode is an exact identity and consumes no
/// randomness. The returned mask must be fed to [`dropout_backward`].
pub fn dropout(
    input: &Tensor,
    rate: f64,
    mode: Mode,
    rng: &mut RngStream,
) -> Result<(Tensor, DropoutMask)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    match mode {
        Mode::Eval => Ok((input.clone(), DropoutMask { factors: None })),
        Mode::Train => {
            let scale = 1.0 / (1.0 - rate);
            let mut out = input.clone();
            let mut factors = Vec::with_capacity(input.len());
            for v in out.data_mut() {
                let factor = if rng.next_f64() < rate { 0.0 } else { scale };
                factors.push(factor);
                *v *= factor;
            }
            Ok((
                out,
                DropoutMask {
                    factors: Some(factors),
                },
            ))
        }
    }
}

/// Backward pass of [`dropout`]: applies the identical mask and scale.
pub fn dropout_backward(mask: &DropoutMask, d_out: &Tensor, d_input: &mut Tensor) -> Result<()> {
    if d_out.shape() != d_input.shape() {
        return Err(Error::Shape("dropout backward shapes disagree".into()));
    }
    match &mask.factors {
        None => {
            for (di, &g) in d_input.data_mut().iter_mut().zip(d_out.data()) {
                *di += g;
            }
        }
        Some(factors) => {
            if factors.len() != d_out.len() {
                return Err(Error::Shape(format!(
                    "dropout mask length {} does not match gradient length {}",
                    factors.len(),
                    d_out.len()
                )));
            }
            for ((di, &g), &f) in d_input.data_mut().iter_mut().zip(d_out.data()).zip(factors) {
                *di += g * f;
            }
        }
    }
    Ok(())
}

/// Flattens each part row-major and concatenates them in argument order
/// into a rank-1 tensor.
pub fn flatten_concat(parts: &[&Tensor]) -> Result<Tensor> {
    let total: usize = parts.iter().map(|p| p.len()).sum();
    let mut data = Vec::with_capacity(total);
    for p in parts {
        if !p.all_finite() {
            return Err(Error::InvalidInput(
                "flatten_concat requires finite inputs".into(),
            ));
        }
        data.extend_from_slice(p.data());
    }
    Tensor::from_vec(&[total], data)
}

/// Backward pass of [`flatten_concat`]: slices the upstream gradient back
/// into tensors of the original part shapes.
pub fn flatten_concat_backward(shapes: &[&[usize]], d_out: &Tensor) -> Result<Vec<Tensor>> {
    let total: usize = shapes.iter().map(|s| s.iter().product::<usize>()).sum();
    if d_out.shape() != [total] {
        return Err(Error::Shape(format!(
            "flatten_concat backward expects upstream of length {total}, got {:?}",
            d_out.shape()
        )));
    }
    let mut grads = Vec::with_capacity(shapes.len());
    let mut offset = 0;
    for shape in shapes {
        let n: usize = shape.iter().product();
        let slice = d_out.data()[offset..offset + n].to_vec();
        grads.push(Tensor::from_vec(shape, slice)?);
        offset += n;
    }
    Ok(grads)
}

/// Glorot-uniform initialization: draws every element of `shape` from
/// `U(-b, b)` with `b = sqrt(6 / (fan_in + fan_out))`, in row-major order.
pub fn init_params(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut RngStream,
) -> Result<Tensor> {
    if fan_in == 0 || fan_out == 0 {
        return Err(Error::InvalidInput(format!(
            "fan_in and fan_out must be positive, got {fan_in} and {fan_out}"
        )));
    }
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.data_mut() {
        *v = rng.uniform(-bound, bound);
    }
    Ok(t)
}
