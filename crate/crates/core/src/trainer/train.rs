use std::io::Write;

use rand::seq::SliceRandom;

use super::adam::AdamState;
use crate::data::TimeSeriesDataset;
use crate::encoder::{build_encoder, EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::nn::Tensor3;
use crate::rng::{seeded_stream, SeededRng};
use crate::triplet::{loss_backprop_through_encoder, sample_for_anchors, BackpropMode, LengthMode};

/// Default negative counts of the combined variant.
pub const UNIVARIATE_KS: [usize; 4] = [1, 2, 5, 10];
pub const MULTIVARIATE_KS: [usize; 3] = [5, 10, 20];

const SCHEDULE_STREAM: u64 = 1;
const SAMPLING_STREAM: u64 = 2;

/// Optimizer steps used when none are requested.
pub fn default_steps(k: usize) -> usize {
    if k >= 10 {
        2000
    } else {
        1500
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Negative samples per anchor.
    pub k: usize,
    pub batch_size: usize,
    /// `None` picks [`default_steps`].
    pub total_steps: Option<usize>,
    pub seed: u64,
    /// `None` picks fixed lengths for equal-length data, varying otherwise.
    pub length_mode: Option<LengthMode>,
    /// `None` picks the cheapest mode each batch allows.
    pub backprop: Option<BackpropMode>,
    /// Record the mean representation norm every this many steps (0 disables).
    pub norm_interval: usize,
    /// At most this many series enter each norm measurement.
    pub norm_sample: usize,
}

impl TrainConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        TrainConfig {
            k,
            batch_size: 10,
            total_steps: None,
            seed,
            length_mode: None,
            backprop: None,
            norm_interval: 100,
            norm_sample: 64,
        }
    }

    pub fn steps(&self) -> usize {
        self.total_steps.unwrap_or_else(|| default_steps(self.k))
    }
}

/// Per-step training record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    /// 1-based optimizer step.
    pub step: usize,
    pub loss: f64,
    pub mean_norm: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub params: EncoderParams,
    pub trace: Vec<TraceEntry>,
    /// Epochs begun by the anchor schedule.
    pub epochs: usize,
}

impl TrainOutput {
    /// Mean loss over trace entries `range`.
    pub fn mean_loss(&self, range: std::ops::Range<usize>) -> f64 {
        let slice = &self.trace[range];
        slice.iter().map(|e| e.loss).sum::<f64>() / slice.len().max(1) as f64
    }
}

/// Anchor order: each epoch visits every series once in a fresh random order;
/// a mini-batch may straddle two epochs.
#[derive(Debug, Clone)]
pub struct AnchorSchedule {
    order: Vec<usize>,
    next: usize,
    epochs: usize,
    rng: SeededRng,
}

impl AnchorSchedule {
    pub fn new(series_count: usize, rng: SeededRng) -> Result<Self> {
        if series_count == 0 {
            return Err(Error::InvalidInput("cannot schedule anchors over an empty dataset".into()));
        }
        Ok(AnchorSchedule {
            order: (0..series_count).collect(),
            next: series_count,
            epochs: 0,
            rng,
        })
    }

    pub fn next_batch(&mut self, size: usize) -> Vec<usize> {
        let mut anchors = Vec::with_capacity(size);
        while anchors.len() < size {
            if self.next == self.order.len() {
                self.order.shuffle(&mut self.rng);
                self.next = 0;
                self.epochs += 1;
            }
            let take = (size - anchors.len()).min(self.order.len() - self.next);
            anchors.extend_from_slice(&self.order[self.next..self.next + take]);
            self.next += take;
        }
        anchors
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }
}

/// Mean ℓ2 norm of the representations of `series`.
pub fn mean_representation_norm(params: &EncoderParams, series: &[Tensor3]) -> Result<f64> {
    if series.is_empty() {
        return Ok(0.0);
    }
    let reprs = params.encode_batch(series)?;
    Ok(reprs.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).sum::<f64>() / reprs.len() as f64)
}

/// Evenly spaced subset used for the norm diagnostic.
fn norm_subsample(series: &[Tensor3], max: usize) -> Vec<Tensor3> {
    if series.len() <= max {
        return series.to_vec();
    }
    (0..max).map(|i| series[i * series.len() / max].clone()).collect()
}

/// Watches the norm diagnostic for runaway growth.
#[derive(Debug, Default)]
struct NormMonitor {
    first: Option<f64>,
    last: f64,
    increasing: bool,
    warned: bool,
}

impl NormMonitor {
    fn record(&mut self, step: usize, norm: f64) {
        match self.first {
            None => {
                self.first = Some(norm);
                self.increasing = true;
            }
            Some(first) => {
                self.increasing &= norm > self.last;
                if self.increasing && norm > 10.0 * first && !self.warned {
                    log::warn!(
                        "mean representation norm grew monotonically from {first:.3} to {norm:.3} by step {step}; training may be diverging"
                    );
                    self.warned = true;
                }
            }
        }
        self.last = norm;
    }
}

/// Trains a fresh encoder with the triplet objective and Adam.
pub fn train_encoder(
    dataset: &TimeSeriesDataset,
    encoder_config: EncoderConfig,
    config: &TrainConfig,
) -> Result<TrainOutput> {
    let params = build_encoder(encoder_config, config.seed)?;
    train_from(params, dataset, config)
}

/// Continues training `params` (e.g. a freshly built encoder).
pub fn train_from(mut params: EncoderParams, dataset: &TimeSeriesDataset, config: &TrainConfig) -> Result<TrainOutput> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot train on an empty dataset".into()));
    }
    if dataset.channels() != params.config.in_channels {
        return Err(Error::ContractViolation(format!(
            "encoder expects {} input channels, dataset has {}",
            params.config.in_channels,
            dataset.channels()
        )));
    }
    if config.k == 0 || config.batch_size == 0 {
        return Err(Error::InvalidInput("negatives and batch size must be at least 1".into()));
    }
    let series = dataset.series();
    let lengths = dataset.lengths();
    let mode = config.length_mode.unwrap_or(if lengths.len() == 1 {
        LengthMode::Varying
    } else {
        LengthMode::for_lengths(&lengths)
    });
    let mut schedule = AnchorSchedule::new(series.len(), seeded_stream(config.seed, SCHEDULE_STREAM))?;
    let mut rng = seeded_stream(config.seed, SAMPLING_STREAM);
    let mut adam = AdamState::new(&params.params());
    let norm_series = norm_subsample(series, config.norm_sample.max(1));
    let mut monitor = NormMonitor::default();
    let total = config.steps();
    let mut trace = Vec::with_capacity(total);

    for step in 1..=total {
        let anchors = schedule.next_batch(config.batch_size);
        let batch = sample_for_anchors(&lengths, &anchors, config.k, &mut rng, mode)?;
        let backprop = config
            .backprop
            .unwrap_or_else(|| BackpropMode::required(dataset.channels(), &batch));
        params.zero_grad();
        let loss = loss_backprop_through_encoder(&mut params, series, &batch, backprop)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient { step });
        }
        adam.step(&mut params.params_mut(), step)?;
        let mean_norm = if config.norm_interval > 0 && step % config.norm_interval == 0 {
            let norm = mean_representation_norm(&params, &norm_series)?;
            monitor.record(step, norm);
            log::info!("step {step}/{total}: loss {loss:.5}, mean representation norm {norm:.4}");
            Some(norm)
        } else {
            None
        };
        trace.push(TraceEntry { step, loss, mean_norm });
    }
    params.zero_grad();
    Ok(TrainOutput {
        params,
        trace,
        epochs: schedule.epochs(),
    })
}

/// One independently trained encoder per entry of `ks`; encoder `i` uses
/// seed `base.seed + i`.
pub fn train_combined(
    dataset: &TimeSeriesDataset,
    encoder_config: EncoderConfig,
    ks: &[usize],
    base: &TrainConfig,
) -> Result<Vec<TrainOutput>> {
    if ks.is_empty() {
        return Err(Error::InvalidInput("combined training needs at least one K".into()));
    }
    ks.iter()
        .enumerate()
        .map(|(i, &k)| {
            let config = TrainConfig {
                k,
                seed: base.seed.wrapping_add(i as u64),
                ..base.clone()
            };
            train_encoder(dataset, encoder_config, &config)
        })
        .collect()
}

/// Row-wise concatenation of every encoder's representation of each series.
pub fn encode_combined(encoders: &[EncoderParams], series: &[Tensor3]) -> Result<Vec<Vec<f64>>> {
    let mut rows = vec![Vec::new(); series.len()];
    for encoder in encoders {
        for (row, r) in rows.iter_mut().zip(encoder.encode_batch(series)?) {
            row.extend(r);
        }
    }
    Ok(rows)
}

/// Writes `step,loss,mean_norm` lines; steps without a norm leave it empty.
pub fn write_trace_csv(trace: &[TraceEntry], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "step,loss,mean_norm")?;
    for e in trace {
        match e.mean_norm {
            Some(n) => writeln!(out, "{},{},{}", e.step, e.loss, n)?,
            None => writeln!(out, "{},{},", e.step, e.loss)?,
        }
    }
    Ok(())
}
