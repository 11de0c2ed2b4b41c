//! Dilated causal 1-D convolution and weight normalization.
//!
//! A causal convolution left-pads its input with `(kernel_size - 1) * dilation`
//! zeros, so `out[t]` only reads `in[..=t]`. Each kernel tap `j` is applied as
//! one strided matrix product between the `(out, in)` tap slice of the weights
//! and the input shifted right by `(kernel_size - 1 - j) * dilation` steps; the
//! padded prefix contributes nothing and is never materialized.

use super::tensor::{ParamTensor, Tensor3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub dilation: usize,
}

impl ConvSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize, dilation: usize) -> Result<Self> {
        if kernel_size == 0 || dilation == 0 || in_channels == 0 || out_channels == 0 {
            return Err(Error::InvalidInput(format!(
                "conv spec needs positive sizes, got in={in_channels} out={out_channels} k={kernel_size} d={dilation}"
            )));
        }
        Ok(ConvSpec {
            in_channels,
            out_channels,
            kernel_size,
            dilation,
        })
    }

    pub fn weight_shape(&self) -> [usize; 3] {
        [self.out_channels, self.in_channels, self.kernel_size]
    }

    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_size
    }

    /// Right shift applied to the input for tap `j`.
    fn shift(&self, j: usize) -> usize {
        (self.kernel_size - 1 - j) * self.dilation
    }

    /// Number of past steps (including the current one) an output sees.
    pub fn receptive_field(&self) -> usize {
        (self.kernel_size - 1) * self.dilation + 1
    }
}

/// `c[m×n] += a[m×k] · b[k×n]` over strided views of flat buffers.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm_acc(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    c: &mut [f64],
    rsc: usize,
    csc: usize,
) {
    if m == 0 || n == 0 || k == 0 {
        return;
    }
    assert!((m - 1) * rsa + (k - 1) * csa < a.len(), "gemm: lhs view out of bounds");
    assert!((k - 1) * rsb + (n - 1) * csb < b.len(), "gemm: rhs view out of bounds");
    assert!((m - 1) * rsc + (n - 1) * csc < c.len(), "gemm: output view out of bounds");
    // SAFETY: the three asserts above bound every element the views can touch,
    // and `c` is a unique borrow so it cannot alias `a` or `b`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            1.0,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

fn check_weights(spec: &ConvSpec, weights: &[f64], bias: &[f64]) -> Result<()> {
    if weights.len() != spec.weight_len() {
        return Err(Error::ContractViolation(format!(
            "conv weights have {} values, shape {:?} needs {}",
            weights.len(),
            spec.weight_shape(),
            spec.weight_len()
        )));
    }
    if bias.len() != spec.out_channels {
        return Err(Error::ContractViolation(format!(
            "conv bias has {} values, expected {}",
            bias.len(),
            spec.out_channels
        )));
    }
    Ok(())
}

/// Forward pass of a dilated causal convolution; output keeps the input length.
pub fn causal_conv1d_forward(input: &Tensor3, weights: &[f64], bias: &[f64], spec: &ConvSpec) -> Result<Tensor3> {
    check_weights(spec, weights, bias)?;
    let (batch, channels, time) = input.shape();
    if time == 0 {
        return Err(Error::InvalidInput("convolution input has no time steps".into()));
    }
    if channels != spec.in_channels {
        return Err(Error::ContractViolation(format!(
            "conv expects {} input channels, got {channels}",
            spec.in_channels
        )));
    }
    let (cin, cout, k) = (spec.in_channels, spec.out_channels, spec.kernel_size);
    let mut out = Tensor3::zeros(batch, cout, time);
    for b in 0..batch {
        let x = input.item(b);
        let y = out.item_mut(b);
        for (o, row) in y.chunks_exact_mut(time).enumerate() {
            row.fill(bias[o]);
        }
        for j in 0..k {
            let shift = spec.shift(j);
            if shift >= time {
                continue;
            }
            let n = time - shift;
            gemm_acc(cout, cin, n, &weights[j..], cin * k, k, x, time, 1, &mut y[shift..], time, 1);
        }
    }
    Ok(out)
}

/// Adjoint of [`causal_conv1d_forward`]. Gradients are accumulated into
/// `grad_weights`, `grad_bias` and (when given) `grad_input`.
#[allow(clippy::too_many_arguments)]
pub fn causal_conv1d_backward(
    input: &Tensor3,
    weights: &[f64],
    spec: &ConvSpec,
    grad_out: &Tensor3,
    grad_weights: &mut [f64],
    grad_bias: &mut [f64],
    grad_input: Option<&mut Tensor3>,
) -> Result<()> {
    let (batch, _, time) = input.shape();
    if grad_out.shape() != (batch, spec.out_channels, time) || input.channels() != spec.in_channels {
        return Err(Error::State(format!(
            "conv backward: upstream gradient {:?} does not match a forward on input {:?}",
            grad_out.shape(),
            input.shape()
        )));
    }
    if grad_weights.len() != spec.weight_len() || grad_bias.len() != spec.out_channels {
        return Err(Error::ContractViolation("conv gradient buffers have wrong sizes".into()));
    }
    let (cin, cout, k) = (spec.in_channels, spec.out_channels, spec.kernel_size);
    let mut grad_input = grad_input;
    if let Some(gi) = grad_input.as_deref() {
        if gi.shape() != input.shape() {
            return Err(Error::ContractViolation("input gradient buffer has wrong shape".into()));
        }
    }
    for b in 0..batch {
        let x = input.item(b);
        let g = grad_out.item(b);
        for (o, row) in g.chunks_exact(time).enumerate() {
            grad_bias[o] += row.iter().sum::<f64>();
        }
        for j in 0..k {
            let shift = spec.shift(j);
            if shift >= time {
                continue;
            }
            let n = time - shift;
            // dW_j[o, c] += sum_t g[o, t + shift] * x[c, t]
            gemm_acc(cout, n, cin, &g[shift..], time, 1, x, 1, time, &mut grad_weights[j..], cin * k, k);
            if let Some(gi) = grad_input.as_deref_mut() {
                // dx[c, t] += sum_o W_j[o, c] * g[o, t + shift]
                gemm_acc(cin, cout, n, &weights[j..], k, cin * k, &g[shift..], time, 1, gi.item_mut(b), time, 1);
            }
        }
    }
    Ok(())
}

/// Effective weights `w[o] = g[o] * v[o] / ||v[o]||` for each output row.
pub fn weight_norm_apply(v: &ParamTensor, g: &ParamTensor) -> Result<Vec<f64>> {
    let rows = check_weight_norm(v, g)?;
    let row_len = v.len() / rows;
    let mut w = Vec::with_capacity(v.len());
    for (o, row) in v.value.chunks_exact(row_len).enumerate() {
        let norm = row_norm(row);
        if norm == 0.0 {
            return Err(Error::SingularParameter { channel: o });
        }
        let scale = g.value[o] / norm;
        w.extend(row.iter().map(|x| x * scale));
    }
    Ok(w)
}

/// Adjoint of [`weight_norm_apply`]: accumulates into `v.grad` and `g.grad`.
pub fn weight_norm_backward(v: &mut ParamTensor, g: &mut ParamTensor, grad_w: &[f64]) -> Result<()> {
    let rows = check_weight_norm(v, g)?;
    if grad_w.len() != v.len() {
        return Err(Error::ContractViolation("weight-norm upstream gradient has wrong size".into()));
    }
    let row_len = v.len() / rows;
    for o in 0..rows {
        let range = o * row_len..(o + 1) * row_len;
        let row = &v.value[range.clone()];
        let gw = &grad_w[range.clone()];
        let norm = row_norm(row);
        if norm == 0.0 {
            return Err(Error::SingularParameter { channel: o });
        }
        let dot: f64 = row.iter().zip(gw).map(|(a, b)| a * b).sum();
        g.grad[o] += dot / norm;
        let scale = g.value[o] / norm;
        let proj = dot / (norm * norm);
        for ((dv, &gwi), &vi) in v.grad[range].iter_mut().zip(gw).zip(row) {
            *dv += scale * (gwi - proj * vi);
        }
    }
    Ok(())
}

fn check_weight_norm(v: &ParamTensor, g: &ParamTensor) -> Result<usize> {
    let rows = g.len();
    if rows == 0 || v.shape().first() != Some(&rows) || v.len() % rows != 0 {
        return Err(Error::ContractViolation(format!(
            "weight norm: v shape {:?} incompatible with {} gains",
            v.shape(),
            rows
        )));
    }
    Ok(rows)
}

pub(crate) fn row_norm(row: &[f64]) -> f64 {
    row.iter().map(|x| x * x).sum::<f64>().sqrt()
}
