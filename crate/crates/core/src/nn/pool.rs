use super::tensor::Tensor3;
use crate::error::{Error, Result};

/// Result of [`global_max_pool`]: one `channels`-vector per batch item plus
/// the time index each maximum came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Pooled {
    pub channels: usize,
    /// `batch × channels`, row-major.
    pub values: Vec<f64>,
    pub argmax: Vec<usize>,
    time: usize,
}

impl Pooled {
    pub fn row(&self, b: usize) -> &[f64] {
        &self.values[b * self.channels..(b + 1) * self.channels]
    }
}

/// Per-channel maximum over the first `valid_lengths[b]` steps of each item.
/// Ties resolve to the lowest time index.
pub fn global_max_pool(input: &Tensor3, valid_lengths: &[usize]) -> Result<Pooled> {
    let (batch, channels, time) = input.shape();
    if valid_lengths.len() != batch {
        return Err(Error::ContractViolation(format!(
            "max pool got {} valid lengths for a batch of {batch}",
            valid_lengths.len()
        )));
    }
    let mut values = Vec::with_capacity(batch * channels);
    let mut argmax = Vec::with_capacity(batch * channels);
    for (b, &len) in valid_lengths.iter().enumerate() {
        if len == 0 || len > time {
            return Err(Error::InvalidInput(format!(
                "valid length {len} outside 1..={time}"
            )));
        }
        for row in input.item(b).chunks_exact(time) {
            let mut best = 0;
            for t in 1..len {
                if row[t] > row[best] {
                    best = t;
                }
            }
            values.push(row[best]);
            argmax.push(best);
        }
    }
    Ok(Pooled {
        channels,
        values,
        argmax,
        time,
    })
}

/// Routes each pooled gradient to its argmax position, accumulating into `grad_input`.
pub fn global_max_pool_backward(pooled: &Pooled, grad: &[f64], grad_input: &mut Tensor3) -> Result<()> {
    let batch = pooled.argmax.len() / pooled.channels.max(1);
    if grad.len() != pooled.values.len() || grad_input.shape() != (batch, pooled.channels, pooled.time) {
        return Err(Error::State("max pool backward does not match its forward pass".into()));
    }
    let time = pooled.time;
    for (i, (&t, &g)) in pooled.argmax.iter().zip(grad).enumerate() {
        grad_input.data_mut()[i * time + t] += g;
    }
    Ok(())
}
