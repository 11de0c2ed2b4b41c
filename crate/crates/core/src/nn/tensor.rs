use crate::error::{Error, Result};

/// Dense `(batch, channels, time)` array in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    batch: usize,
    channels: usize,
    time: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(batch: usize, channels: usize, time: usize) -> Self {
        Tensor3 {
            batch,
            channels,
            time,
            data: vec![0.0; batch * channels * time],
        }
    }

    pub fn from_vec(batch: usize, channels: usize, time: usize, data: Vec<f64>) -> Result<Self> {
        if time == 0 {
            return Err(Error::InvalidInput("tensor time dimension is 0".into()));
        }
        if data.len() != batch * channels * time {
            return Err(Error::ContractViolation(format!(
                "tensor data has {} values, shape ({batch}, {channels}, {time}) needs {}",
                data.len(),
                batch * channels * time
            )));
        }
        Ok(Tensor3 {
            batch,
            channels,
            time,
            data,
        })
    }

    /// A single-item tensor from channel rows of equal length.
    pub fn from_channels(rows: &[Vec<f64>]) -> Result<Self> {
        let channels = rows.len();
        let time = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != time) {
            return Err(Error::ContractViolation("channel rows have unequal lengths".into()));
        }
        Tensor3::from_vec(1, channels, time, rows.concat())
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.batch, self.channels, self.time)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Contiguous `channels × time` block of one batch item.
    pub fn item(&self, b: usize) -> &[f64] {
        let n = self.channels * self.time;
        &self.data[b * n..(b + 1) * n]
    }

    pub fn item_mut(&mut self, b: usize) -> &mut [f64] {
        let n = self.channels * self.time;
        &mut self.data[b * n..(b + 1) * n]
    }

    pub fn get(&self, b: usize, c: usize, t: usize) -> f64 {
        self.data[(b * self.channels + c) * self.time + t]
    }

    pub fn set(&mut self, b: usize, c: usize, t: usize, value: f64) {
        self.data[(b * self.channels + c) * self.time + t] = value;
    }

    /// Copy of time steps `start..start + len` of item `b`, as a single-item tensor.
    pub fn slice_time(&self, b: usize, start: usize, len: usize) -> Result<Tensor3> {
        if len == 0 || start + len > self.time {
            return Err(Error::InvalidInput(format!(
                "time slice {start}..{} outside 0..{}",
                start + len,
                self.time
            )));
        }
        let mut out = Vec::with_capacity(self.channels * len);
        let item = self.item(b);
        for c in 0..self.channels {
            let row = &item[c * self.time..(c + 1) * self.time];
            out.extend_from_slice(&row[start..start + len]);
        }
        Tensor3::from_vec(1, self.channels, len, out)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor3) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Trainable array with its gradient accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    shape: Vec<usize>,
    pub value: Vec<f64>,
    pub grad: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        ParamTensor {
            shape: shape.to_vec(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
        }
    }

    pub fn from_values(shape: &[usize], value: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if value.len() != n {
            return Err(Error::ContractViolation(format!(
                "parameter of shape {shape:?} needs {n} values, got {}",
                value.len()
            )));
        }
        Ok(ParamTensor {
            shape: shape.to_vec(),
            grad: vec![0.0; n],
            value,
        })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
