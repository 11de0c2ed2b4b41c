//! Penalty selection, accuracy, the sparse-label split, and report rows.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::index::sample;

use super::svm::{default_gamma, svm_train, SvmClassifier};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Below this many training rows, or this many rows in the smallest class,
/// the penalty is left unbounded instead of cross-validated.
pub const CV_MIN_TRAIN: usize = 50;
pub const CV_MIN_CLASS: usize = 5;

/// `10^-4 … 10^4` followed by the unbounded penalty.
pub fn c_grid() -> Vec<f64> {
    (-4..=4).map(|i| 10f64.powi(i)).chain([f64::INFINITY]).collect()
}

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::ContractViolation(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("accuracy of an empty prediction set".into()));
    }
    Ok(pred.iter().zip(truth).filter(|(p, t)| p == t).count() as f64 / pred.len() as f64)
}

fn class_members(labels: &[String]) -> BTreeMap<&str, Vec<usize>> {
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        members.entry(l).or_default().push(i);
    }
    members
}

/// Stratified folds: each class's rows, in order, are dealt round-robin.
pub fn stratified_folds(labels: &[String], k: usize) -> Vec<Vec<usize>> {
    let k = k.max(1);
    let mut folds = vec![Vec::new(); k];
    for rows in class_members(labels).values() {
        for (r, &i) in rows.iter().enumerate() {
            folds[r % k].push(i);
        }
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    folds
}

/// Picks the penalty with the best mean stratified-fold accuracy; ties go to
/// the smaller penalty. Small training sets get the unbounded penalty.
pub fn svm_cross_validate_c(x: &[Vec<f64>], labels: &[String], gamma: f64) -> Result<f64> {
    let members = class_members(labels);
    if members.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "SVM training needs at least two classes, found {}",
            members.len()
        )));
    }
    let smallest = members.values().map(Vec::len).min().unwrap_or(0);
    if x.len() < CV_MIN_TRAIN || smallest < CV_MIN_CLASS {
        return Ok(f64::INFINITY);
    }
    let folds = stratified_folds(labels, smallest.min(5));
    let mut best = (f64::NEG_INFINITY, f64::INFINITY);
    for c in c_grid() {
        let mut total = 0.0;
        for (f, test) in folds.iter().enumerate() {
            let train: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|&(g, _)| g != f)
                .flat_map(|(_, rows)| rows.iter().copied())
                .collect();
            let pick = |rows: &[usize]| -> (Vec<Vec<f64>>, Vec<String>) {
                rows.iter().map(|&i| (x[i].clone(), labels[i].clone())).unzip()
            };
            let (tx, ty) = pick(&train);
            let (vx, vy) = pick(test);
            let clf = svm_train(&tx, &ty, c, gamma)?;
            total += accuracy(&clf.predict(&vx), &vy)?;
        }
        let mean = total / folds.len() as f64;
        log::debug!("C={c}: cross-validated accuracy {mean:.4}");
        if mean > best.0 {
            best = (mean, c);
        }
    }
    Ok(best.1)
}

/// Gamma from the training features, penalty by cross-validation, then a fit
/// on the whole training set. Returns the classifier and the chosen penalty.
pub fn fit_svm(x: &[Vec<f64>], labels: &[String]) -> Result<(SvmClassifier, f64)> {
    let gamma = default_gamma(x);
    let c = svm_cross_validate_c(x, labels, gamma)?;
    Ok((svm_train(x, labels, c, gamma)?, c))
}

/// Stratified subset of `⌈fraction · N⌉` indices (sorted) with at least one
/// row per class. Each class gets its proportional share rounded down, and
/// the remaining slots go to the largest remainders.
pub fn sparse_label_protocol(labels: &[String], fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("label fraction {fraction} must lie in (0, 1]")));
    }
    let members = class_members(labels);
    let target = (fraction * labels.len() as f64).ceil() as usize;
    let mut quota: Vec<(usize, f64)> = members
        .values()
        .map(|rows| {
            let exact = fraction * rows.len() as f64;
            let base = exact.floor() as usize;
            (base.max(1), exact - base as f64)
        })
        .collect();
    let assigned: usize = quota.iter().map(|q| q.0).sum();
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| quota[b].1.total_cmp(&quota[a].1));
    let rows: Vec<&Vec<usize>> = members.values().collect();
    let mut missing = target.saturating_sub(assigned);
    for &c in order.iter().cycle().take(order.len() * 2) {
        if missing == 0 {
            break;
        }
        if quota[c].0 < rows[c].len() {
            quota[c].0 += 1;
            missing -= 1;
        }
    }
    let mut rng = seeded(seed);
    let mut chosen: Vec<usize> = rows
        .iter()
        .zip(&quota)
        .flat_map(|(rows, &(q, _))| {
            sample(&mut rng, rows.len(), q.min(rows.len()))
                .into_iter()
                .map(|i| rows[i])
                .collect::<Vec<_>>()
        })
        .collect();
    chosen.sort_unstable();
    Ok(chosen)
}

/// Header of the evaluation report CSV.
pub const REPORT_HEADER: &str = "dataset,variant,classifier,accuracy,seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dataset: String,
    pub variant: String,
    pub classifier: String,
    pub accuracy: f64,
    pub seconds: f64,
}

impl fmt::Display for ReportRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{:.6},{:.3}",
            self.dataset, self.variant, self.classifier, self.accuracy, self.seconds
        )
    }
}
