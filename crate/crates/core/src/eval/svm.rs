//! RBF-kernel support vector classification trained with SMO.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Value that stands in for an unbounded penalty.
pub const C_INFINITE: f64 = 1e8;
/// Full kernel matrices are precomputed up to this many training rows.
const FULL_KERNEL_MAX_ROWS: usize = 6000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    /// Stop once the maximal KKT violation drops to this value. Objective
    /// error shrinks roughly with its square.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tolerance: 1e-4,
            max_iterations: 10_000_000,
        }
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(a, b)).exp()
}

/// `1 / (d · mean per-feature variance)`, or `1 / d` for constant features.
pub fn default_gamma(x: &[Vec<f64>]) -> f64 {
    let d = x.first().map_or(1, Vec::len).max(1);
    let n = x.len().max(1) as f64;
    let mut total_var = 0.0;
    for f in 0..d.min(x.first().map_or(0, Vec::len)) {
        let mean = x.iter().map(|r| r[f]).sum::<f64>() / n;
        total_var += x.iter().map(|r| (r[f] - mean).powi(2)).sum::<f64>() / n;
    }
    let var = total_var / d as f64;
    if var > 0.0 && var.is_finite() {
        1.0 / (d as f64 * var)
    } else {
        1.0 / d as f64
    }
}

/// Maps the unbounded sentinel (`f64::INFINITY`) to [`C_INFINITE`].
pub fn effective_c(c: f64) -> f64 {
    if c.is_infinite() {
        C_INFINITE
    } else {
        c
    }
}

/// Binary machine: `f(x) = Σ coef_i K(sv_i, x) + bias`, `coef_i = α_i y_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
    /// Dual objective `½ αᵀQα − Σα` at the solution.
    pub dual_objective: f64,
    pub iterations: usize,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias
    }
}

/// Solution of the binary dual, including multipliers of every training row.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub model: SvmModel,
}

enum Kernel<'a> {
    Full { n: usize, k: Vec<f64> },
    OnDemand { x: &'a [Vec<f64>], gamma: f64 },
}

impl Kernel<'_> {
    fn new(x: &[Vec<f64>], gamma: f64) -> Kernel<'_> {
        let n = x.len();
        if n > FULL_KERNEL_MAX_ROWS {
            return Kernel::OnDemand { x, gamma };
        }
        let k = (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (0..n).map(move |j| rbf_kernel(&x[i], &x[j], gamma)))
            .collect();
        Kernel::Full { n, k }
    }

    fn row(&self, i: usize, out: &mut Vec<f64>) {
        out.clear();
        match self {
            Kernel::Full { n, k } => out.extend_from_slice(&k[i * n..(i + 1) * n]),
            Kernel::OnDemand { x, gamma } => out.extend(x.iter().map(|xj| rbf_kernel(&x[i], xj, *gamma))),
        }
    }

    fn diag(&self, i: usize) -> f64 {
        match self {
            Kernel::Full { n, k } => k[i * n + i],
            Kernel::OnDemand { .. } => 1.0,
        }
    }
}

/// Solves the binary dual for labels `y ∈ {+1, −1}` with second-order
/// working-set selection.
pub fn svm_train_binary(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64, options: SmoOptions) -> Result<BinarySolution> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::ContractViolation(format!("{n} rows but {} labels", y.len())));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidInput("binary labels must be +1 or -1".into()));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::DegenerateLabels("binary SVM needs both classes".into()));
    }
    if let Some(d) = x.first().map(Vec::len) {
        if x.iter().any(|r| r.len() != d) {
            return Err(Error::ContractViolation("rows have different dimensions".into()));
        }
    }
    let c = effective_c(c);
    if !(c > 0.0) || !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("penalty {c} and gamma {gamma} must be positive")));
    }

    let kernel = Kernel::new(x, gamma);
    let qd: Vec<f64> = (0..n).map(|i| kernel.diag(i)).collect();
    let mut alpha = vec![0.0; n];
    // Gradient of the dual objective, Qα − e.
    let mut grad = vec![-1.0; n];
    let mut ki = Vec::with_capacity(n);
    let mut kj = Vec::with_capacity(n);
    let mut iterations = 0;

    while iterations < options.max_iterations {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..n {
            let in_up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if in_up && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        if i == usize::MAX {
            break;
        }
        kernel.row(i, &mut ki);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut obj_min = f64::INFINITY;
        for t in 0..n {
            let in_low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = qd[i] + qd[t] - 2.0 * ki[t];
                let quad = if quad > 0.0 { quad } else { TAU };
                let obj = -(diff * diff) / quad;
                if obj <= obj_min {
                    obj_min = obj;
                    j = t;
                }
            }
        }
        if gmax + gmax2 < options.tolerance || j == usize::MAX {
            break;
        }
        iterations += 1;
        kernel.row(j, &mut kj);

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = ki[j];
        if y[i] != y[j] {
            let quad = qd[i] + qd[j] - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = qd[i] + qd[j] - 2.0 * kij;
            let quad = if quad > 0.0 { quad } else { TAU };
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }
    if iterations == options.max_iterations {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance {}", options.tolerance);
    }

    let bias = -rho(&alpha, y, &grad, c);
    let dual_objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();
    let support: Vec<usize> = (0..n).filter(|&t| alpha[t] > 0.0).collect();
    let model = SvmModel {
        support_vectors: support.iter().map(|&t| x[t].clone()).collect(),
        dual_coef: support.iter().map(|&t| alpha[t] * y[t]).collect(),
        bias,
        gamma,
        c,
        dual_objective,
        iterations,
    };
    Ok(BinarySolution { alpha, model })
}

/// Offset from the free multipliers, or the midpoint of the feasible range
/// when every multiplier sits at a bound.
fn rho(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum += yg;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// One-vs-one machine for the classes `classes[pos]` (+1) and `classes[neg]` (−1).
#[derive(Debug, Clone, PartialEq)]
pub struct PairMachine {
    pub pos: usize,
    pub neg: usize,
    pub model: SvmModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmClassifier {
    /// Sorted distinct labels.
    pub classes: Vec<String>,
    pub machines: Vec<PairMachine>,
}

impl SvmClassifier {
    /// Majority vote over the pairwise machines; ties go to the smallest label.
    pub fn predict_one(&self, x: &[f64]) -> &str {
        let mut votes = vec![0usize; self.classes.len()];
        for m in &self.machines {
            if m.model.decision(x) > 0.0 {
                votes[m.pos] += 1;
            } else {
                votes[m.neg] += 1;
            }
        }
        let mut best = 0;
        for (c, &v) in votes.iter().enumerate() {
            if v > votes[best] {
                best = c;
            }
        }
        &self.classes[best]
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<String> {
        x.par_iter().map(|r| self.predict_one(r).to_string()).collect()
    }
}

/// Trains one binary machine per pair of classes.
pub fn svm_train(x: &[Vec<f64>], labels: &[String], c: f64, gamma: f64) -> Result<SvmClassifier> {
    svm_train_with(x, labels, c, gamma, SmoOptions::default())
}

pub fn svm_train_with(
    x: &[Vec<f64>],
    labels: &[String],
    c: f64,
    gamma: f64,
    options: SmoOptions,
) -> Result<SvmClassifier> {
    if x.len() != labels.len() {
        return Err(Error::ContractViolation(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    let classes: Vec<String> = labels.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "SVM training needs at least two classes, found {}",
            classes.len()
        )));
    }
    let class_of: Vec<usize> = labels
        .iter()
        .map(|l| classes.binary_search(l).expect("label is among the classes"))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();
    let machines = pairs
        .into_par_iter()
        .map(|(a, b)| {
            let rows: Vec<usize> = (0..x.len()).filter(|&t| class_of[t] == a || class_of[t] == b).collect();
            let sub: Vec<Vec<f64>> = rows.iter().map(|&t| x[t].clone()).collect();
            let y: Vec<f64> = rows.iter().map(|&t| if class_of[t] == a { 1.0 } else { -1.0 }).collect();
            let model = svm_train_binary(&sub, &y, c, gamma, options)?.model;
            Ok(PairMachine { pos: a, neg: b, model })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SvmClassifier { classes, machines })
}
