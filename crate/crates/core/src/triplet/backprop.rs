use super::loss::{dot, sigmoid, softplus, triplet_loss, triplet_loss_grad};
use super::sampling::{Interval, TripletBatch};
use crate::encoder::{EffectiveWeights, EncoderParams};
use crate::error::{Error, Result};
use crate::nn::{Differentiable, ParamTensor, Tensor3};

/// Subseries length above which per-term backpropagation is required.
pub const PER_TERM_LENGTH_THRESHOLD: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackpropMode {
    /// Keep every subseries' activations alive and backpropagate together.
    Joint,
    /// Backpropagate one loss term at a time, keeping only the reference trace
    /// and one other trace alive.
    PerTerm,
}

impl BackpropMode {
    /// Per-term for multivariate data or any subseries longer than
    /// [`PER_TERM_LENGTH_THRESHOLD`], joint otherwise.
    pub fn required(channels: usize, batch: &TripletBatch) -> BackpropMode {
        if channels > 1 || batch.max_len() > PER_TERM_LENGTH_THRESHOLD {
            BackpropMode::PerTerm
        } else {
            BackpropMode::Joint
        }
    }
}

fn extract(series: &[Tensor3], iv: &Interval) -> Result<Tensor3> {
    let s = series
        .get(iv.series)
        .ok_or_else(|| Error::InvalidInput(format!("interval refers to missing series {}", iv.series)))?;
    s.slice_time(0, iv.start, iv.len)
}

/// Mean triplet loss over the batch, without gradients.
pub fn batch_loss(params: &EncoderParams, series: &[Tensor3], batch: &TripletBatch) -> Result<f64> {
    let weights = params.effective_weights()?;
    let encode = |iv: &Interval| -> Result<Vec<f64>> {
        let x = extract(series, iv)?;
        Ok(params.forward(&weights, &x, &[x.time()])?.0)
    };
    let mut total = 0.0;
    for t in &batch.triplets {
        let r = encode(&t.reference)?;
        let p = encode(&t.positive)?;
        let negs = t.negatives.iter().map(encode).collect::<Result<Vec<_>>>()?;
        total += triplet_loss(&r, &p, &negs)?.total;
    }
    Ok(total / batch.triplets.len().max(1) as f64)
}

/// Accumulates the gradient of the mean batch loss into `params` and returns
/// that loss. Both modes produce the same gradient up to summation order.
pub fn loss_backprop_through_encoder(
    params: &mut EncoderParams,
    series: &[Tensor3],
    batch: &TripletBatch,
    mode: BackpropMode,
) -> Result<f64> {
    if batch.triplets.is_empty() {
        return Ok(0.0);
    }
    let weights = params.effective_weights()?;
    let scale = 1.0 / batch.triplets.len() as f64;
    let mut total = 0.0;
    for t in &batch.triplets {
        total += match mode {
            BackpropMode::Joint => joint(params, &weights, series, t, scale)?,
            BackpropMode::PerTerm => per_term(params, &weights, series, t, scale)?,
        };
    }
    Ok(total * scale)
}

fn scaled(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}

fn joint(
    params: &mut EncoderParams,
    weights: &EffectiveWeights,
    series: &[Tensor3],
    t: &super::Triplet,
    scale: f64,
) -> Result<f64> {
    let mut reprs = Vec::with_capacity(t.negatives.len() + 2);
    let mut traces = Vec::with_capacity(t.negatives.len() + 2);
    for iv in std::iter::once(&t.reference).chain(std::iter::once(&t.positive)).chain(&t.negatives) {
        let x = extract(series, iv)?;
        let (r, trace) = params.forward(weights, &x, &[x.time()])?;
        reprs.push(r);
        traces.push(trace);
    }
    let negs = reprs[2..].to_vec();
    let loss = triplet_loss(&reprs[0], &reprs[1], &negs)?;
    let grads = triplet_loss_grad(&reprs[0], &reprs[1], &negs)?;
    params.backward(weights, &traces[0], &scaled(&grads.reference, scale))?;
    params.backward(weights, &traces[1], &scaled(&grads.positive, scale))?;
    for (trace, g) in traces[2..].iter().zip(&grads.negatives) {
        params.backward(weights, trace, &scaled(g, scale))?;
    }
    Ok(loss.total)
}

fn per_term(
    params: &mut EncoderParams,
    weights: &EffectiveWeights,
    series: &[Tensor3],
    t: &super::Triplet,
    scale: f64,
) -> Result<f64> {
    let x_ref = extract(series, &t.reference)?;
    let (r_ref, ref_trace) = params.forward(weights, &x_ref, &[x_ref.time()])?;
    let mut grad_ref = vec![0.0; r_ref.len()];
    let mut total = 0.0;
    // (interval, sign): the positive term is softplus(-<r, p>), negatives softplus(<r, n>).
    let terms = std::iter::once((&t.positive, -1.0)).chain(t.negatives.iter().map(|n| (n, 1.0)));
    for (iv, sign) in terms {
        let x = extract(series, iv)?;
        let (r, trace) = params.forward(weights, &x, &[x.time()])?;
        let z = sign * dot(&r_ref, &r);
        total += softplus(z);
        let coef = sign * sigmoid(z);
        for (g, v) in grad_ref.iter_mut().zip(&r) {
            *g += coef * v;
        }
        params.backward(weights, &trace, &scaled(&r_ref, coef * scale))?;
    }
    params.backward(weights, &ref_trace, &scaled(&grad_ref, scale))?;
    Ok(total)
}

/// Gradient-check adapter: mean triplet loss over a fixed batch as a
/// function of every encoder parameter.
pub struct TripletHarness {
    pub params: EncoderParams,
    pub series: Vec<Tensor3>,
    pub batch: TripletBatch,
    pub mode: BackpropMode,
}

impl Differentiable for TripletHarness {
    fn loss(&mut self) -> Result<f64> {
        batch_loss(&self.params, &self.series, &self.batch)
    }

    fn backward(&mut self) -> Result<()> {
        loss_backprop_through_encoder(&mut self.params, &self.series, &self.batch, self.mode).map(|_| ())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.params.params_mut()
    }
}
