use super::TimeSeriesDataset;
use crate::nn::Tensor3;

/// Below this standard deviation a channel is treated as constant.
pub const MIN_STD: f64 = 1e-8;

/// Per-channel mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Statistics pooled over every value of every series, channel by channel.
    pub fn compute(dataset: &TimeSeriesDataset) -> NormStats {
        let channels = dataset.channels();
        let mut count = 0usize;
        let mut mean = vec![0.0; channels];
        for s in dataset.series() {
            count += s.time();
            for (m, row) in mean.iter_mut().zip(s.data().chunks_exact(s.time())) {
                *m += row.iter().sum::<f64>();
            }
        }
        let n = count.max(1) as f64;
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; channels];
        for s in dataset.series() {
            for ((v, row), m) in var.iter_mut().zip(s.data().chunks_exact(s.time())).zip(&mean) {
                *v += row.iter().map(|x| (x - m) * (x - m)).sum::<f64>();
            }
        }
        NormStats {
            mean,
            std: var.into_iter().map(|v| (v / n).sqrt()).collect(),
        }
    }

    /// Single-channel statistics of a plain value slice.
    pub fn of_values(values: &[f64]) -> NormStats {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        NormStats {
            mean: vec![mean],
            std: vec![var.sqrt()],
        }
    }

    fn apply_value(&self, c: usize, x: f64) -> f64 {
        if self.std[c] < MIN_STD {
            0.0
        } else {
            (x - self.mean[c]) / self.std[c]
        }
    }

    /// Standardizes `dataset` with these statistics (e.g. train stats on a test split).
    pub fn apply(&self, dataset: &TimeSeriesDataset) -> TimeSeriesDataset {
        dataset.map_series(|s| {
            let mut out = s.clone();
            let time = s.time();
            for (c, row) in out.data_mut().chunks_exact_mut(time).enumerate() {
                for x in row {
                    *x = self.apply_value(c, *x);
                }
            }
            out
        })
    }

    pub fn apply_values(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&x| self.apply_value(0, x)).collect()
    }

    pub fn apply_tensor(&self, series: &Tensor3) -> Tensor3 {
        let mut out = series.clone();
        let time = series.time();
        for (i, row) in out.data_mut().chunks_exact_mut(time).enumerate() {
            let c = i % series.channels();
            for x in row {
                *x = self.apply_value(c, *x);
            }
        }
        out
    }
}

/// Zero mean, unit variance per channel over the pooled dataset values.
/// Constant channels become all zeros.
pub fn normalize(dataset: &TimeSeriesDataset) -> (TimeSeriesDataset, NormStats) {
    let stats = NormStats::compute(dataset);
    (stats.apply(dataset), stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn three_values() {
        let d = TimeSeriesDataset::univariate("x", vec![vec![1.0, 2.0, 3.0]], None).unwrap();
        let (n, stats) = normalize(&d);
        let s = (2.0f64 / 3.0).sqrt();
        assert!((stats.std[0] - s).abs() < 1e-15);
        let expected = [-1.224745, 0.0, 1.224745];
        for (a, b) in n.series()[0].data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_channel_zeroed() {
        let d = TimeSeriesDataset::univariate("x", vec![vec![5.0, 5.0, 5.0]], None).unwrap();
        assert_eq!(normalize(&d).0.series()[0].data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn channels_independent() {
        let s = Tensor3::from_channels(&[vec![1.0, 3.0], vec![100.0, 300.0]]).unwrap();
        let d = TimeSeriesDataset::new("x", vec![s], None).unwrap();
        let (n, stats) = normalize(&d);
        assert_eq!(stats.mean, vec![2.0, 200.0]);
        assert_eq!(n.series()[0].data(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn standardized(rows in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 1..20), 1..6)) {
            let d = TimeSeriesDataset::univariate("x", rows, None).unwrap();
            prop_assume!(NormStats::compute(&d).std[0] > 1e-3);
            let (n, _) = normalize(&d);
            let after = NormStats::compute(&n);
            prop_assert!(after.mean[0].abs() < 1e-9);
            prop_assert!((after.std[0].powi(2) - 1.0).abs() < 1e-9);
        }
    }
}
