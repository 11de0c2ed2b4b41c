use crate::error::{Error, Result};
use crate::nn::conv::gemm_acc;

pub const DEFAULT_STEPS: usize = 5000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

/// Linear map `x ↦ w·x + b` to a scalar target.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProbe {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl RegressionProbe {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }
}

/// Learning rate capped at `1/(2d)`. The mean-squared-error curvature on `d`
/// standardized features is at most `2d`, so descent at this rate cannot
/// diverge even when every feature is the same.
pub fn stable_learning_rate(dim: usize, lr: f64) -> f64 {
    lr.min(0.5 / dim.max(1) as f64)
}

/// Full-batch gradient descent on the mean squared error. Features are
/// standardized internally and the result is mapped back to raw inputs.
pub fn linreg_train(x: &[Vec<f64>], targets: &[f64], steps: usize, lr: f64) -> Result<RegressionProbe> {
    let n = x.len();
    if n == 0 || n != targets.len() {
        return Err(Error::ContractViolation(format!("{n} rows but {} targets", targets.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::ContractViolation("rows have different dimensions".into()));
    }
    if x.iter().flatten().chain(targets).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("regression inputs must be finite".into()));
    }
    let nf = n as f64;
    let mean: Vec<f64> = (0..d).map(|f| x.iter().map(|r| r[f]).sum::<f64>() / nf).collect();
    let scale: Vec<f64> = (0..d)
        .map(|f| {
            let var = x.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / nf;
            if var.sqrt() > 1e-12 {
                1.0 / var.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let z: Vec<f64> = x
        .iter()
        .flat_map(|r| r.iter().enumerate().map(|(f, v)| (v - mean[f]) * scale[f]))
        .collect();

    // Centered features leave the bias gradient at zero once it equals the target mean.
    let bias = targets.iter().sum::<f64>() / nf;
    let mut w = vec![0.0; d];
    let mut residual = vec![0.0; n];
    let mut grad = vec![0.0; d];
    for step in 1..=steps {
        for (r, t) in residual.iter_mut().zip(targets) {
            *r = bias - t;
        }
        gemm_acc(n, d, 1, &z, d, 1, &w, 1, 1, &mut residual, 1, 1);
        grad.fill(0.0);
        gemm_acc(d, n, 1, &z, 1, d, &residual, 1, 1, &mut grad, 1, 1);
        for (wf, g) in w.iter_mut().zip(&grad) {
            *wf -= lr * 2.0 / nf * g;
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step, lr });
        }
    }
    let weights: Vec<f64> = w.iter().zip(&scale).map(|(w, s)| w * s).collect();
    let bias = bias - weights.iter().zip(&mean).map(|(w, m)| w * m).sum::<f64>();
    Ok(RegressionProbe { weights, bias })
}

pub fn linreg_mse(probe: &RegressionProbe, x: &[Vec<f64>], targets: &[f64]) -> Result<f64> {
    if x.len() != targets.len() || x.is_empty() {
        return Err(Error::ContractViolation(format!("{} rows but {} targets", x.len(), targets.len())));
    }
    if x.iter().any(|r| r.len() != probe.weights.len()) {
        return Err(Error::ContractViolation(format!(
            "probe expects dimension {}",
            probe.weights.len()
        )));
    }
    Ok(x.iter().zip(targets).map(|(r, t)| (probe.predict(r) - t).powi(2)).sum::<f64>() / x.len() as f64)
}
