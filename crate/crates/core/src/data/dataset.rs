use crate::error::{Error, Result};
use crate::nn::Tensor3;

/// A collection of series sharing one channel count, optionally labelled.
/// Each series is a single-item `(1, channels, length)` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    pub name: String,
    series: Vec<Tensor3>,
    labels: Option<Vec<String>>,
}

impl TimeSeriesDataset {
    pub fn new(name: impl Into<String>, series: Vec<Tensor3>, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(first) = series.first() {
            let channels = first.channels();
            for (i, s) in series.iter().enumerate() {
                if s.batch() != 1 {
                    return Err(Error::ContractViolation(format!("series {i} is a batch of {}", s.batch())));
                }
                if s.channels() != channels {
                    return Err(Error::ContractViolation(format!(
                        "series {i} has {} channels, expected {channels}",
                        s.channels()
                    )));
                }
                if s.time() == 0 {
                    return Err(Error::InvalidInput(format!("series {i} is empty")));
                }
            }
        }
        if let Some(l) = &labels {
            if l.len() != series.len() {
                return Err(Error::ContractViolation(format!(
                    "{} labels for {} series",
                    l.len(),
                    series.len()
                )));
            }
        }
        Ok(TimeSeriesDataset {
            name: name.into(),
            series,
            labels,
        })
    }

    /// Univariate dataset from plain value vectors.
    pub fn univariate(name: impl Into<String>, values: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<Self> {
        let series = values
            .into_iter()
            .map(|v| Tensor3::from_vec(1, 1, v.len(), v))
            .collect::<Result<_>>()?;
        TimeSeriesDataset::new(name, series, labels)
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Channel count (0 for an empty dataset).
    pub fn channels(&self) -> usize {
        self.series.first().map_or(0, Tensor3::channels)
    }

    pub fn series(&self) -> &[Tensor3] {
        &self.series
    }

    pub fn lengths(&self) -> Vec<usize> {
        self.series.iter().map(Tensor3::time).collect()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Labels, or an error naming the dataset when it has none.
    pub fn require_labels(&self) -> Result<&[String]> {
        self.labels()
            .ok_or_else(|| Error::InvalidInput(format!("dataset {:?} has no labels", self.name)))
    }

    pub fn subset(&self, indices: &[usize]) -> TimeSeriesDataset {
        TimeSeriesDataset {
            name: self.name.clone(),
            series: indices.iter().map(|&i| self.series[i].clone()).collect(),
            labels: self.labels.as_ref().map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        }
    }

    pub(crate) fn map_series(&self, f: impl Fn(&Tensor3) -> Tensor3) -> TimeSeriesDataset {
        TimeSeriesDataset {
            name: self.name.clone(),
            series: self.series.iter().map(f).collect(),
            labels: self.labels.clone(),
        }
    }
}
