//! Causal CNN encoder: a stack of residual blocks with exponentially growing
//! dilation, a global max pool over time, and a final linear map.
//!
//! Block `i < depth` uses dilation `2^i`; an extra widening block at dilation
//! `2^depth` maps `channels` to `pre_pool_channels`. Inside a block:
//!
//! ```text
//! h1  = leaky(wn_conv1(x))
//! h2  = leaky(wn_conv2(h1))
//! out = h2 + (x | conv1x1(x))
//! ```

mod io;

use rand::Rng;
use rayon::prelude::*;

pub use io::{load_model, read_model, save_model, write_model, MODEL_MAGIC, MODEL_VERSION};

use crate::error::{Error, Result};
use crate::nn::activation::leaky_relu_in_place;
use crate::nn::conv::row_norm;
use crate::nn::{
    causal_conv1d_backward, causal_conv1d_forward, global_max_pool, global_max_pool_backward, weight_norm_apply,
    weight_norm_backward, ConvSpec, Linear, ParamTensor, Pooled, Tensor3,
};
use crate::rng::{seeded, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    /// Channel count of the input series.
    pub in_channels: usize,
    pub channels: usize,
    pub depth: usize,
    pub pre_pool_channels: usize,
    pub repr_dim: usize,
    pub kernel_size: usize,
    pub leaky_slope: f64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            in_channels: 1,
            channels: 40,
            depth: 10,
            pre_pool_channels: 320,
            repr_dim: 160,
            kernel_size: 3,
            leaky_slope: 0.01,
        }
    }
}

impl EncoderConfig {
    /// Settings used for the long household-power series.
    pub fn long_series() -> Self {
        EncoderConfig {
            channels: 30,
            pre_pool_channels: 160,
            repr_dim: 80,
            ..EncoderConfig::default()
        }
    }

    pub fn with_in_channels(self, in_channels: usize) -> Self {
        EncoderConfig { in_channels, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("in_channels", self.in_channels),
            ("channels", self.channels),
            ("pre_pool_channels", self.pre_pool_channels),
            ("repr_dim", self.repr_dim),
            ("kernel_size", self.kernel_size),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidInput(format!("encoder {name} must be at least 1")));
        }
        if self.depth >= 31 {
            return Err(Error::InvalidInput(format!("encoder depth {} overflows the dilation", self.depth)));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::InvalidInput(format!(
                "leaky slope {} must lie in (0, 1)",
                self.leaky_slope
            )));
        }
        Ok(())
    }

    /// Number of residual blocks, widening block included.
    pub fn block_count(&self) -> usize {
        self.depth + 1
    }

    pub fn dilation(&self, block: usize) -> usize {
        1 << block
    }
}

/// Input steps that can influence one pre-pool output step.
pub fn receptive_field(config: &EncoderConfig) -> usize {
    let k = config.kernel_size - 1;
    1 + (0..=config.depth).map(|i| 2 * k * (1usize << i)).sum::<usize>()
}

/// Weight-normalized causal convolution parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct WnConv {
    pub spec: ConvSpec,
    pub v: ParamTensor,
    pub g: ParamTensor,
    pub bias: ParamTensor,
}

impl WnConv {
    fn init(spec: ConvSpec, rng: &mut SeededRng) -> Self {
        let v = uniform(rng, &spec.weight_shape(), spec.in_channels * spec.kernel_size);
        let row_len = spec.in_channels * spec.kernel_size;
        let norms = v.value.chunks_exact(row_len).map(row_norm).collect();
        WnConv {
            spec,
            g: ParamTensor::from_values(&[spec.out_channels], norms).expect("one gain per row"),
            v,
            bias: ParamTensor::zeros(&[spec.out_channels]),
        }
    }
}

/// Plain 1×1 convolution on the skip path of a block that changes width.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub spec: ConvSpec,
    pub weight: ParamTensor,
    pub bias: ParamTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualBlock {
    pub conv1: WnConv,
    pub conv2: WnConv,
    pub projection: Option<Projection>,
}

/// All trainable weights of the encoder, each paired with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub blocks: Vec<ResidualBlock>,
    pub linear: Linear,
}

fn uniform(rng: &mut SeededRng, shape: &[usize], fan_in: usize) -> ParamTensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n = shape.iter().product();
    let values = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    ParamTensor::from_values(shape, values).expect("shape and length agree")
}

/// Builds a freshly initialized encoder; the same seed gives identical weights.
pub fn build_encoder(config: EncoderConfig, seed: u64) -> Result<EncoderParams> {
    config.validate()?;
    let mut rng = seeded(seed);
    let k = config.kernel_size;
    let mut blocks = Vec::with_capacity(config.block_count());
    for i in 0..config.block_count() {
        let cin = if i == 0 { config.in_channels } else { config.channels };
        let cout = if i == config.depth { config.pre_pool_channels } else { config.channels };
        let d = config.dilation(i);
        let conv1 = WnConv::init(ConvSpec::new(cin, cout, k, d)?, &mut rng);
        let conv2 = WnConv::init(ConvSpec::new(cout, cout, k, d)?, &mut rng);
        let projection = (cin != cout).then(|| {
            let spec = ConvSpec::new(cin, cout, 1, 1).expect("positive sizes");
            Projection {
                weight: uniform(&mut rng, &spec.weight_shape(), cin),
                bias: ParamTensor::zeros(&[cout]),
                spec,
            }
        });
        blocks.push(ResidualBlock {
            conv1,
            conv2,
            projection,
        });
    }
    let linear = Linear::new(
        uniform(&mut rng, &[config.repr_dim, config.pre_pool_channels], config.pre_pool_channels),
        ParamTensor::zeros(&[config.repr_dim]),
    )?;
    Ok(EncoderParams { config, blocks, linear })
}

/// Weight-normalized kernels of every block, computed once per parameter state.
#[derive(Debug, Clone)]
pub struct EffectiveWeights {
    blocks: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Activations cached by a forward pass, consumed by [`EncoderParams::backward`].
#[derive(Debug, Clone)]
pub struct EncoderTrace {
    /// Block inputs; the last entry is the pre-pool activation.
    inputs: Vec<Tensor3>,
    /// `(h1, h2)` per block, post-activation.
    hidden: Vec<(Tensor3, Tensor3)>,
    pooled: Pooled,
}

impl EncoderTrace {
    /// Activation sequence entering the max pool.
    pub fn pre_pool(&self) -> &Tensor3 {
        self.inputs.last().expect("at least the input")
    }

    pub fn pooled(&self) -> &Pooled {
        &self.pooled
    }
}

impl EncoderParams {
    pub fn effective_weights(&self) -> Result<EffectiveWeights> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| Ok((weight_norm_apply(&b.conv1.v, &b.conv1.g)?, weight_norm_apply(&b.conv2.v, &b.conv2.g)?)))
            .collect::<Result<_>>()?;
        Ok(EffectiveWeights { blocks })
    }

    /// Every parameter tensor, in persistence order.
    pub fn params(&self) -> Vec<&ParamTensor> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.extend([&b.conv1.v, &b.conv1.g, &b.conv1.bias, &b.conv2.v, &b.conv2.g, &b.conv2.bias]);
            if let Some(p) = &b.projection {
                out.extend([&p.weight, &p.bias]);
            }
        }
        out.extend([&self.linear.weight, &self.linear.bias]);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out = Vec::new();
        for b in &mut self.blocks {
            out.extend([
                &mut b.conv1.v,
                &mut b.conv1.g,
                &mut b.conv1.bias,
                &mut b.conv2.v,
                &mut b.conv2.g,
                &mut b.conv2.bias,
            ]);
            if let Some(p) = &mut b.projection {
                out.extend([&mut p.weight, &mut p.bias]);
            }
        }
        out.extend([&mut self.linear.weight, &mut self.linear.bias]);
        out
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Runs the network on a (possibly padded) batch; pooling for item `b`
    /// only looks at its first `valid_lengths[b]` steps. Returns one
    /// representation row per item and the trace for the backward pass.
    pub fn forward(
        &self,
        weights: &EffectiveWeights,
        input: &Tensor3,
        valid_lengths: &[usize],
    ) -> Result<(Vec<f64>, EncoderTrace)> {
        let cfg = &self.config;
        if input.channels() != cfg.in_channels {
            return Err(Error::ContractViolation(format!(
                "encoder expects {} input channels, got {}",
                cfg.in_channels,
                input.channels()
            )));
        }
        if input.time() == 0 || valid_lengths.contains(&0) {
            return Err(Error::InvalidInput("series length must be at least 1".into()));
        }
        if weights.blocks.len() != self.blocks.len() {
            return Err(Error::State("effective weights belong to a different encoder".into()));
        }
        let slope = cfg.leaky_slope;
        let mut inputs = Vec::with_capacity(self.blocks.len() + 1);
        let mut hidden = Vec::with_capacity(self.blocks.len());
        inputs.push(input.clone());
        for (block, (w1, w2)) in self.blocks.iter().zip(&weights.blocks) {
            let x = inputs.last().expect("non-empty");
            let mut h1 = causal_conv1d_forward(x, w1, &block.conv1.bias.value, &block.conv1.spec)?;
            leaky_relu_in_place(h1.data_mut(), slope);
            let mut h2 = causal_conv1d_forward(&h1, w2, &block.conv2.bias.value, &block.conv2.spec)?;
            leaky_relu_in_place(h2.data_mut(), slope);
            let mut out = match &block.projection {
                Some(p) => causal_conv1d_forward(x, &p.weight.value, &p.bias.value, &p.spec)?,
                None => x.clone(),
            };
            out.add_assign(&h2);
            hidden.push((h1, h2));
            inputs.push(out);
        }
        let pooled = global_max_pool(inputs.last().expect("non-empty"), valid_lengths)?;
        let repr = self.linear.forward(&pooled.values)?;
        Ok((repr, EncoderTrace { inputs, hidden, pooled }))
    }

    /// Accumulates parameter gradients for an upstream gradient on the
    /// representations produced by the forward pass that built `trace`.
    pub fn backward(&mut self, weights: &EffectiveWeights, trace: &EncoderTrace, grad_repr: &[f64]) -> Result<()> {
        if trace.hidden.len() != self.blocks.len() || weights.blocks.len() != self.blocks.len() {
            return Err(Error::State("trace was produced by a different encoder".into()));
        }
        let slope = self.config.leaky_slope;
        let grad_pooled = self.linear.backward(&trace.pooled.values, grad_repr)?;
        let pre_pool = trace.pre_pool();
        let (b, c, t) = pre_pool.shape();
        let mut grad = Tensor3::zeros(b, c, t);
        global_max_pool_backward(&trace.pooled, &grad_pooled, &mut grad)?;

        for (i, block) in self.blocks.iter_mut().enumerate().rev() {
            let x = &trace.inputs[i];
            let (h1, h2) = &trace.hidden[i];
            let (w1, w2) = &weights.blocks[i];
            let mut grad_x = match &mut block.projection {
                Some(p) => {
                    let mut gx = Tensor3::zeros(x.batch(), x.channels(), x.time());
                    causal_conv1d_backward(x, &p.weight.value, &p.spec, &grad, &mut p.weight.grad, &mut p.bias.grad, Some(&mut gx))?;
                    gx
                }
                None => grad.clone(),
            };
            // h = leaky(a) keeps the sign of a, so the derivative is read off h.
            let mut g2 = grad;
            scale_by_leaky_derivative(&mut g2, h2, slope)?;
            let mut grad_w2 = vec![0.0; block.conv2.spec.weight_len()];
            let mut g1 = Tensor3::zeros(h1.batch(), h1.channels(), h1.time());
            causal_conv1d_backward(h1, w2, &block.conv2.spec, &g2, &mut grad_w2, &mut block.conv2.bias.grad, Some(&mut g1))?;
            weight_norm_backward(&mut block.conv2.v, &mut block.conv2.g, &grad_w2)?;
            scale_by_leaky_derivative(&mut g1, h1, slope)?;
            let mut grad_w1 = vec![0.0; block.conv1.spec.weight_len()];
            let need_input_grad = i > 0;
            causal_conv1d_backward(
                x,
                w1,
                &block.conv1.spec,
                &g1,
                &mut grad_w1,
                &mut block.conv1.bias.grad,
                need_input_grad.then_some(&mut grad_x),
            )?;
            weight_norm_backward(&mut block.conv1.v, &mut block.conv1.g, &grad_w1)?;
            grad = grad_x;
        }
        Ok(())
    }

    /// Representation of one series of valid length `valid_length` (batch 1).
    pub fn encode(&self, series: &Tensor3, valid_length: usize) -> Result<Vec<f64>> {
        let weights = self.effective_weights()?;
        self.encode_with(&weights, series, valid_length)
    }

    fn encode_with(&self, weights: &EffectiveWeights, series: &Tensor3, valid_length: usize) -> Result<Vec<f64>> {
        if series.batch() != 1 {
            return Err(Error::ContractViolation(format!(
                "encode takes a single series, got a batch of {}",
                series.batch()
            )));
        }
        if valid_length == 0 || valid_length > series.time() {
            return Err(Error::InvalidInput(format!(
                "valid length {valid_length} outside 1..={}",
                series.time()
            )));
        }
        let trimmed;
        let input = if valid_length < series.time() {
            trimmed = series.slice_time(0, 0, valid_length)?;
            &trimmed
        } else {
            series
        };
        Ok(self.forward(weights, input, &[valid_length])?.0)
    }

    /// Encodes each series independently (in parallel); row `i` is exactly
    /// `encode(series[i])`. Returns an `N × repr_dim` row-major matrix.
    pub fn encode_batch(&self, series: &[Tensor3]) -> Result<Vec<Vec<f64>>> {
        if series.is_empty() {
            return Ok(Vec::new());
        }
        let weights = self.effective_weights()?;
        series
            .par_iter()
            .map(|s| self.encode_with(&weights, s, s.time()))
            .collect()
    }

    /// Encodes a zero-padded batch in one pass, pooling within each valid length.
    pub fn encode_padded(&self, batch: &Tensor3, valid_lengths: &[usize]) -> Result<Vec<Vec<f64>>> {
        let weights = self.effective_weights()?;
        let (flat, _) = self.forward(&weights, batch, valid_lengths)?;
        Ok(flat.chunks_exact(self.config.repr_dim).map(<[f64]>::to_vec).collect())
    }
}

fn scale_by_leaky_derivative(grad: &mut Tensor3, activated: &Tensor3, slope: f64) -> Result<()> {
    if grad.shape() != activated.shape() {
        return Err(Error::State("activation gradient does not match its forward pass".into()));
    }
    for (g, &h) in grad.data_mut().iter_mut().zip(activated.data()) {
        if h <= 0.0 {
            *g *= slope;
        }
    }
    Ok(())
}

/// Gradient-check adapter: the encoder under a fixed random readout of its
/// representations for a fixed set of input series.
pub struct EncoderHarness {
    pub params: EncoderParams,
    pub series: Vec<Tensor3>,
    readout: Vec<Vec<f64>>,
}

impl EncoderHarness {
    pub fn new(params: EncoderParams, series: Vec<Tensor3>, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let readout = series
            .iter()
            .map(|_| (0..params.config.repr_dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        EncoderHarness { params, series, readout }
    }
}

impl crate::nn::Differentiable for EncoderHarness {
    fn loss(&mut self) -> Result<f64> {
        let reprs = self.params.encode_batch(&self.series)?;
        Ok(reprs
            .iter()
            .zip(&self.readout)
            .map(|(r, w)| r.iter().zip(w).map(|(a, b)| a * b).sum::<f64>())
            .sum())
    }

    fn backward(&mut self) -> Result<()> {
        let weights = self.params.effective_weights()?;
        for (s, w) in self.series.iter().zip(&self.readout) {
            let (_, trace) = self.params.forward(&weights, s, &[s.time()])?;
            self.params.backward(&weights, &trace, w)?;
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.params.params_mut()
    }
}
