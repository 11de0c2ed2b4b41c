//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, Normal};
use tsrep::data::TimeSeriesDataset;
use tsrep::rng::SeededRng;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for a (numerically) singular matrix.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * d).exp()
}

/// Minimum of `½ αᵀQα − Σα` subject to `0 ≤ α ≤ c`, `Σ αᵢyᵢ = 0`, found by
/// enumerating every assignment of each αᵢ to {0, c, free}. For each
/// assignment the free coordinates solve the stationarity conditions of the
/// face; feasible solutions are compared and the smallest objective wins.
pub fn exhaustive_svm_dual(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> f64 {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * rbf(&x[i], &x[j], gamma)).collect())
        .collect();
    let objective = |alpha: &[f64]| {
        let mut v = 0.0;
        for i in 0..n {
            for j in 0..n {
                v += 0.5 * alpha[i] * alpha[j] * q[i][j];
            }
            v -= alpha[i];
        }
        v
    };
    let tol = 1e-9 * c.max(1.0);
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut r = code;
        for s in state.iter_mut() {
            *s = (r % 3) as u8;
            r /= 3;
        }
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        if !free.is_empty() {
            // Unknowns: α_F then the multiplier ν of the equality constraint.
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut b = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = q[i][j];
                }
                a[r][m] = y[i];
                let fixed: f64 = (0..n).filter(|j| state[*j] == 1).map(|j| q[i][j] * c).sum();
                b[r] = 1.0 - fixed;
                a[m][r] = y[i];
            }
            b[m] = -(0..n).filter(|j| state[*j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = solve(a, b) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let balance: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
        if balance.abs() > tol || alpha.iter().any(|&a| a < -tol || a > c + tol) {
            continue;
        }
        best = best.min(objective(&alpha));
    }
    best
}

pub fn inertia(x: &[Vec<f64>], assignment: &[usize], k: usize) -> f64 {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in x.iter().zip(assignment) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    x.iter()
        .zip(assignment)
        .map(|(p, &a)| {
            p.iter()
                .zip(&sums[a])
                .map(|(v, s)| (v - s / counts[a] as f64).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Smallest within-cluster sum of squares over all `kⁿ` labelings.
pub fn exhaustive_kmeans(x: &[Vec<f64>], k: usize) -> f64 {
    let n = x.len();
    let mut best = f64::INFINITY;
    let mut assignment = vec![0usize; n];
    for code in 0..k.pow(n as u32) {
        let mut r = code;
        for a in assignment.iter_mut() {
            *a = r % k;
            r /= k;
        }
        best = best.min(inertia(x, &assignment, k));
    }
    best
}

/// Ordinary least squares with intercept via the normal equations.
/// Returns `(weights, bias)`.
pub fn least_squares(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
    let d = x[0].len();
    let mut a = vec![vec![0.0; d + 1]; d + 1];
    let mut b = vec![0.0; d + 1];
    for (row, &t) in x.iter().zip(y) {
        let ext: Vec<f64> = row.iter().copied().chain(std::iter::once(1.0)).collect();
        for i in 0..=d {
            for j in 0..=d {
                a[i][j] += ext[i] * ext[j];
            }
            b[i] += ext[i] * t;
        }
    }
    let sol = solve(a, b).expect("full-rank design");
    (sol[..d].to_vec(), sol[d])
}

/// Two-class set of random-phase sines and square waves of period 30 with
/// Gaussian noise.
pub fn sine_square(n: usize, length: usize, noise: f64, rng: &mut SeededRng) -> TimeSeriesDataset {
    let normal = Normal::new(0.0, noise).unwrap();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let square = i % 2 == 1;
        let row = (0..length)
            .map(|t| {
                let s = (std::f64::consts::TAU * t as f64 / 30.0 + phase).sin();
                let v = if !square {
                    s
                } else if s >= 0.0 {
                    1.0
                } else {
                    -1.0
                };
                v + normal.sample(rng)
            })
            .collect();
        rows.push(row);
        labels.push(if square { "square" } else { "sine" }.to_string());
    }
    TimeSeriesDataset::univariate("sine-square", rows, Some(labels)).unwrap()
}
