//! Nearest-neighbour classification under ℓ2 and dynamic time warping.

use rayon::prelude::*;

use super::svm::squared_distance;
use crate::error::{Error, Result};
use crate::nn::Tensor3;

/// Index of the closest candidate; ties go to the lowest index.
fn nearest(count: usize, mut dist: impl FnMut(usize) -> f64) -> usize {
    let mut best = (0, f64::INFINITY);
    for i in 0..count {
        let d = dist(i);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Label of the ℓ2-nearest training row for every test row.
pub fn knn1_classify(train: &[Vec<f64>], labels: &[String], test: &[Vec<f64>]) -> Result<Vec<String>> {
    check_train(train.len(), labels.len())?;
    let d = train[0].len();
    if train.iter().chain(test).any(|r| r.len() != d) {
        return Err(Error::ContractViolation(format!("rows must all have dimension {d}")));
    }
    Ok(test
        .par_iter()
        .map(|q| labels[nearest(train.len(), |i| squared_distance(&train[i], q))].clone())
        .collect())
}

fn check_train(rows: usize, labels: usize) -> Result<()> {
    if rows == 0 {
        return Err(Error::InvalidInput("nearest-neighbour search needs training rows".into()));
    }
    if rows != labels {
        return Err(Error::ContractViolation(format!("{rows} training rows but {labels} labels")));
    }
    Ok(())
}

/// Cumulative squared-difference warping cost between two single-item
/// series, summed over channels at each step; no window, no square root.
pub fn dtw_distance(x: &Tensor3, y: &Tensor3) -> Result<f64> {
    if x.channels() != y.channels() {
        return Err(Error::ContractViolation(format!(
            "series have {} and {} channels",
            x.channels(),
            y.channels()
        )));
    }
    Ok(dtw(x.item(0), x.time(), y.item(0), y.time(), x.channels(), f64::INFINITY))
}

/// Univariate convenience form of [`dtw_distance`].
pub fn dtw_distance_1d(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidInput("DTW needs non-empty series".into()));
    }
    Ok(dtw(x, x.len(), y, y.len(), 1, f64::INFINITY))
}

/// Rolling-row dynamic program over channel-major data. Returns infinity as
/// soon as a whole row exceeds `abandon_above`, which cannot change which
/// candidate is nearest.
fn dtw(x: &[f64], nx: usize, y: &[f64], ny: usize, channels: usize, abandon_above: f64) -> f64 {
    let cost = |i: usize, j: usize| -> f64 {
        (0..channels)
            .map(|c| {
                let d = x[c * nx + i] - y[c * ny + j];
                d * d
            })
            .sum()
    };
    let mut prev = vec![f64::INFINITY; ny];
    let mut cur = vec![f64::INFINITY; ny];
    for i in 0..nx {
        let mut row_min = f64::INFINITY;
        for j in 0..ny {
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            cur[j] = cost(i, j) + best;
            row_min = row_min.min(cur[j]);
        }
        if row_min > abandon_above {
            return f64::INFINITY;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[ny - 1]
}

/// Label of the DTW-nearest training series for every test series.
pub fn dtw_classify(train: &[Tensor3], labels: &[String], test: &[Tensor3]) -> Result<Vec<String>> {
    check_train(train.len(), labels.len())?;
    let channels = train[0].channels();
    if train.iter().chain(test).any(|s| s.channels() != channels) {
        return Err(Error::ContractViolation(format!("series must all have {channels} channels")));
    }
    Ok(test
        .par_iter()
        .map(|q| {
            let mut best = (0, f64::INFINITY);
            for (i, s) in train.iter().enumerate() {
                let d = dtw(s.item(0), s.time(), q.item(0), q.time(), channels, best.1);
                if d < best.1 {
                    best = (i, d);
                }
            }
            labels[best.0].clone()
        })
        .collect())
}
