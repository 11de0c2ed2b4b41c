//! Central-difference gradient checking.
//!
//! A [`Differentiable`] exposes a scalar objective over its parameters and an
//! analytic backward pass. [`gradient_check`] compares the two and reports
//! `max |fd - grad| / max(1, |grad|)` over the checked coordinates, leaving
//! out coordinates whose finite-difference step crosses a kink.

use rand::seq::index::sample;
use rand::Rng;

use super::activation::{leaky_relu, leaky_relu_backward};
use super::conv::{causal_conv1d_backward, causal_conv1d_forward, weight_norm_apply, weight_norm_backward, ConvSpec};
use super::linear::{linear_backward, linear_forward};
use super::pool::{global_max_pool, global_max_pool_backward};
use super::tensor::{ParamTensor, Tensor3};
use crate::error::Result;
use crate::rng::{seeded, SeededRng};

pub trait Differentiable {
    /// Objective at the current parameter values.
    fn loss(&mut self) -> Result<f64>;
    /// Runs forward and backward, accumulating the gradient of [`Self::loss`]
    /// into every parameter's `grad`.
    fn backward(&mut self) -> Result<()>;
    fn params_mut(&mut self) -> Vec<&mut ParamTensor>;
}

#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Check at most this many randomly chosen coordinates per tensor.
    pub max_entries_per_tensor: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-6,
            max_entries_per_tensor: None,
            seed: 0,
        }
    }
}

/// Outcome of a [`gradient_check_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// `max |fd - grad| / max(1, |grad|)` over the scored coordinates.
    pub max_error: f64,
    /// Coordinates compared against central differences.
    pub checked: usize,
    /// Coordinates left out because `x ± step` straddles a kink of the
    /// objective (a leaky-ReLU hinge or a max-pool switch).
    pub kinks: usize,
}

/// One-sided slopes that disagree by more than this (relative to
/// `max(1, |grad|)`) mark a coordinate whose step crosses a kink. A kink
/// inside the step moves the central difference by half that disagreement,
/// so no kink can push a scored error above half this value.
const KINK_THRESHOLD: f64 = 1e-4;

pub fn gradient_check<M: Differentiable + ?Sized>(module: &mut M, opts: GradCheckOptions) -> Result<f64> {
    Ok(gradient_check_report(module, opts)?.max_error)
}

pub fn gradient_check_report<M: Differentiable + ?Sized>(module: &mut M, opts: GradCheckOptions) -> Result<GradCheckReport> {
    for p in module.params_mut() {
        p.zero_grad();
    }
    module.backward()?;
    let analytic: Vec<Vec<f64>> = module.params_mut().iter().map(|p| p.grad.clone()).collect();
    let center = module.loss()?;

    let mut rng = seeded(opts.seed);
    let mut report = GradCheckReport {
        max_error: 0.0,
        checked: 0,
        kinks: 0,
    };
    for (ti, grads) in analytic.iter().enumerate() {
        let entries: Vec<usize> = match opts.max_entries_per_tensor {
            Some(m) if m < grads.len() => sample(&mut rng, grads.len(), m).into_vec(),
            _ => (0..grads.len()).collect(),
        };
        for e in entries {
            let original = module.params_mut()[ti].value[e];
            module.params_mut()[ti].value[e] = original + opts.step;
            let plus = module.loss()?;
            module.params_mut()[ti].value[e] = original - opts.step;
            let minus = module.loss()?;
            module.params_mut()[ti].value[e] = original;
            let scale = grads[e].abs().max(1.0);
            let forward = (plus - center) / opts.step;
            let backward = (center - minus) / opts.step;
            if (forward - backward).abs() / scale > KINK_THRESHOLD {
                report.kinks += 1;
                continue;
            }
            let fd = (plus - minus) / (2.0 * opts.step);
            report.max_error = report.max_error.max((fd - grads[e]).abs() / scale);
            report.checked += 1;
        }
    }
    Ok(report)
}

fn uniform_param(rng: &mut SeededRng, shape: &[usize], lo: f64, hi: f64) -> ParamTensor {
    let n = shape.iter().product();
    let values = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    ParamTensor::from_values(shape, values).expect("shape and length agree")
}

/// Random values bounded away from zero, so a kink never sits within `h` of a sample.
fn away_from_zero(rng: &mut SeededRng, shape: &[usize]) -> ParamTensor {
    let mut p = uniform_param(rng, shape, 0.1, 2.0);
    for v in &mut p.value {
        if rng.random_bool(0.5) {
            *v = -*v;
        }
    }
    p
}

fn project(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(a, b)| a * b).sum()
}

fn as_tensor(p: &ParamTensor) -> Tensor3 {
    let s = p.shape();
    Tensor3::from_vec(s[0], s[1], s[2], p.value.clone()).expect("3-d parameter")
}

/// Weight-normalized (or plain) causal convolution under a random linear readout.
pub struct ConvHarness {
    pub spec: ConvSpec,
    pub input: ParamTensor,
    pub v: ParamTensor,
    pub g: ParamTensor,
    pub bias: ParamTensor,
    pub weight_norm: bool,
    readout: Vec<f64>,
}

impl ConvHarness {
    pub fn random(spec: ConvSpec, batch: usize, time: usize, weight_norm: bool, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let input = uniform_param(&mut rng, &[batch, spec.in_channels, time], -1.0, 1.0);
        let v = uniform_param(&mut rng, &spec.weight_shape(), -1.0, 1.0);
        let g = uniform_param(&mut rng, &[spec.out_channels], 0.5, 1.5);
        let bias = uniform_param(&mut rng, &[spec.out_channels], -0.5, 0.5);
        let readout = (0..batch * spec.out_channels * time)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        ConvHarness {
            spec,
            input,
            v,
            g,
            bias,
            weight_norm,
            readout,
        }
    }

    fn weights(&self) -> Result<Vec<f64>> {
        if self.weight_norm {
            weight_norm_apply(&self.v, &self.g)
        } else {
            Ok(self.v.value.clone())
        }
    }
}

impl Differentiable for ConvHarness {
    fn loss(&mut self) -> Result<f64> {
        let out = causal_conv1d_forward(&as_tensor(&self.input), &self.weights()?, &self.bias.value, &self.spec)?;
        Ok(project(out.data(), &self.readout))
    }

    fn backward(&mut self) -> Result<()> {
        let x = as_tensor(&self.input);
        let (b, c, t) = x.shape();
        let grad_out = Tensor3::from_vec(b, self.spec.out_channels, t, self.readout.clone())?;
        let mut grad_w = vec![0.0; self.spec.weight_len()];
        let mut grad_x = Tensor3::zeros(b, c, t);
        causal_conv1d_backward(&x, &self.weights()?, &self.spec, &grad_out, &mut grad_w, &mut self.bias.grad, Some(&mut grad_x))?;
        if self.weight_norm {
            weight_norm_backward(&mut self.v, &mut self.g, &grad_w)?;
        } else {
            for (a, b) in self.v.grad.iter_mut().zip(&grad_w) {
                *a += b;
            }
        }
        for (a, b) in self.input.grad.iter_mut().zip(grad_x.data()) {
            *a += b;
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        if self.weight_norm {
            vec![&mut self.input, &mut self.v, &mut self.g, &mut self.bias]
        } else {
            vec![&mut self.input, &mut self.v, &mut self.bias]
        }
    }
}

pub struct LeakyReluHarness {
    pub input: ParamTensor,
    pub slope: f64,
    readout: Vec<f64>,
}

impl LeakyReluHarness {
    pub fn random(channels: usize, time: usize, slope: f64, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let input = away_from_zero(&mut rng, &[1, channels, time]);
        let readout = (0..channels * time).map(|_| rng.random_range(-1.0..1.0)).collect();
        LeakyReluHarness { input, slope, readout }
    }
}

impl Differentiable for LeakyReluHarness {
    fn loss(&mut self) -> Result<f64> {
        Ok(project(leaky_relu(&as_tensor(&self.input), self.slope).data(), &self.readout))
    }

    fn backward(&mut self) -> Result<()> {
        let x = as_tensor(&self.input);
        let (b, c, t) = x.shape();
        let mut g = Tensor3::from_vec(b, c, t, self.readout.clone())?;
        leaky_relu_backward(&x, self.slope, &mut g)?;
        for (a, b) in self.input.grad.iter_mut().zip(g.data()) {
            *a += b;
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.input]
    }
}

/// Global max pooling with distinct input values (well separated maxima).
pub struct MaxPoolHarness {
    pub input: ParamTensor,
    pub valid_lengths: Vec<usize>,
    readout: Vec<f64>,
}

impl MaxPoolHarness {
    pub fn random(batch: usize, channels: usize, time: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        let n = batch * channels * time;
        // A shuffled ladder keeps every pair of values at least 0.01 apart.
        let mut values: Vec<f64> = (0..n).map(|i| i as f64 * 0.01).collect();
        rand::seq::SliceRandom::shuffle(values.as_mut_slice(), &mut rng);
        let input = ParamTensor::from_values(&[batch, channels, time], values).expect("shape");
        let valid_lengths = (0..batch).map(|_| rng.random_range(1..=time)).collect();
        let readout = (0..batch * channels).map(|_| rng.random_range(-1.0..1.0)).collect();
        MaxPoolHarness {
            input,
            valid_lengths,
            readout,
        }
    }
}

impl Differentiable for MaxPoolHarness {
    fn loss(&mut self) -> Result<f64> {
        let pooled = global_max_pool(&as_tensor(&self.input), &self.valid_lengths)?;
        Ok(project(&pooled.values, &self.readout))
    }

    fn backward(&mut self) -> Result<()> {
        let x = as_tensor(&self.input);
        let (b, c, t) = x.shape();
        let pooled = global_max_pool(&x, &self.valid_lengths)?;
        let mut gi = Tensor3::zeros(b, c, t);
        global_max_pool_backward(&pooled, &self.readout, &mut gi)?;
        for (a, b) in self.input.grad.iter_mut().zip(gi.data()) {
            *a += b;
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.input]
    }
}

pub struct LinearHarness {
    pub input: ParamTensor,
    pub weight: ParamTensor,
    pub bias: ParamTensor,
    readout: Vec<f64>,
}

impl LinearHarness {
    pub fn random(rows: usize, in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut rng = seeded(seed);
        LinearHarness {
            input: uniform_param(&mut rng, &[rows, in_dim], -1.0, 1.0),
            weight: uniform_param(&mut rng, &[out_dim, in_dim], -1.0, 1.0),
            bias: uniform_param(&mut rng, &[out_dim], -1.0, 1.0),
            readout: (0..rows * out_dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }
}

impl Differentiable for LinearHarness {
    fn loss(&mut self) -> Result<f64> {
        let y = linear_forward(&self.input.value, &self.weight, &self.bias)?;
        Ok(project(&y, &self.readout))
    }

    fn backward(&mut self) -> Result<()> {
        let gx = linear_backward(&self.input.value, &mut self.weight, &mut self.bias, &self.readout)?;
        for (a, b) in self.input.grad.iter_mut().zip(&gx) {
            *a += b;
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        vec![&mut self.input, &mut self.weight, &mut self.bias]
    }
}

/// Wraps a module and negates its analytic gradient; a correct checker must flag it.
pub struct SignFlipped<M>(pub M);

impl<M: Differentiable> Differentiable for SignFlipped<M> {
    fn loss(&mut self) -> Result<f64> {
        self.0.loss()
    }

    fn backward(&mut self) -> Result<()> {
        self.0.backward()?;
        for p in self.0.params_mut() {
            for g in &mut p.grad {
                *g = -*g;
            }
        }
        Ok(())
    }

    fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        self.0.params_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-4;

    #[test]
    fn linear_layer() {
        let mut h = LinearHarness::random(3, 5, 4, 1);
        assert!(gradient_check(&mut h, GradCheckOptions::default()).unwrap() <= 1e-6);
    }

    #[test]
    fn conv_with_and_without_weight_norm() {
        for (seed, dilation) in [(2, 1), (3, 2), (4, 4)] {
            let spec = ConvSpec::new(3, 2, 3, dilation).unwrap();
            for wn in [false, true] {
                let mut h = ConvHarness::random(spec, 2, 5, wn, seed);
                let err = gradient_check(&mut h, GradCheckOptions::default()).unwrap();
                assert!(err <= TOL, "dilation {dilation} wn {wn}: {err}");
            }
        }
    }

    #[test]
    fn leaky_relu_and_pool() {
        let mut h = LeakyReluHarness::random(3, 7, 0.01, 5);
        assert!(gradient_check(&mut h, GradCheckOptions::default()).unwrap() <= TOL);
        let mut h = MaxPoolHarness::random(2, 3, 6, 6);
        assert!(gradient_check(&mut h, GradCheckOptions::default()).unwrap() <= TOL);
    }

    struct Hinge(ParamTensor);

    impl Differentiable for Hinge {
        fn loss(&mut self) -> Result<f64> {
            Ok(self.0.value[0].max(0.0) + 2.0 * self.0.value[1])
        }
        fn backward(&mut self) -> Result<()> {
            self.0.grad[0] += if self.0.value[0] > 0.0 { 1.0 } else { 0.0 };
            self.0.grad[1] += 2.0;
            Ok(())
        }
        fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn kinks_are_counted_not_scored() {
        let mut h = Hinge(ParamTensor::from_values(&[2], vec![3e-7, 0.5]).unwrap());
        let r = gradient_check_report(&mut h, GradCheckOptions::default()).unwrap();
        assert_eq!((r.checked, r.kinks), (1, 1));
        assert!(r.max_error < 1e-8);
        let mut h = Hinge(ParamTensor::from_values(&[2], vec![0.3, 0.5]).unwrap());
        assert_eq!(gradient_check_report(&mut h, GradCheckOptions::default()).unwrap().kinks, 0);
    }

    #[test]
    fn sign_flip_is_detected() {
        let mut h = SignFlipped(LinearHarness::random(3, 5, 4, 7));
        assert!(gradient_check(&mut h, GradCheckOptions::default()).unwrap() >= 0.5);
    }

    #[test]
    fn accumulation_is_additive() {
        let spec = ConvSpec::new(2, 2, 3, 1).unwrap();
        let mut once = ConvHarness::random(spec, 1, 6, true, 8);
        let mut twice = ConvHarness::random(spec, 1, 6, true, 8);
        // Doubling the readout doubles the upstream gradient.
        for r in &mut once.readout {
            *r *= 2.0;
        }
        once.backward().unwrap();
        twice.backward().unwrap();
        twice.backward().unwrap();
        for (a, b) in once.params_mut().into_iter().zip(twice.params_mut()) {
            for (x, y) in a.grad.iter().zip(&b.grad) {
                assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
            }
        }
    }
}
