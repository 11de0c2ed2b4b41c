//! Adam, the training loop, and combined-K training.

mod adam;
mod train;

pub use adam::{AdamState, DEFAULT_LEARNING_RATE};
pub use train::{
    default_steps, encode_combined, mean_representation_norm, train_combined, train_encoder, train_from,
    write_trace_csv, AnchorSchedule, TraceEntry, TrainConfig, TrainOutput, MULTIVARIATE_KS, UNIVARIATE_KS,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::TimeSeriesDataset;
    use crate::encoder::{build_encoder, EncoderConfig};
    use crate::rng::seeded;

    fn tiny_config() -> EncoderConfig {
        EncoderConfig {
            channels: 4,
            depth: 2,
            pre_pool_channels: 6,
            repr_dim: 3,
            ..EncoderConfig::default()
        }
    }

    fn toy_dataset(n: usize, len: usize) -> TimeSeriesDataset {
        let rows = (0..n)
            .map(|i| (0..len).map(|t| ((t as f64) * 0.2 * (1 + i % 3) as f64 + 0.3).sin()).collect())
            .collect();
        TimeSeriesDataset::univariate("toy", rows, None).unwrap()
    }

    #[test]
    fn step_defaults() {
        assert_eq!(default_steps(10), 2000);
        assert_eq!(default_steps(20), 2000);
        assert_eq!(default_steps(5), 1500);
        let c = TrainConfig::new(5, 0);
        assert_eq!((c.batch_size, c.steps()), (10, 1500));
    }

    #[test]
    fn twenty_epochs_for_a_thousand_series() {
        let mut schedule = AnchorSchedule::new(1000, seeded(3)).unwrap();
        let mut seen = vec![0usize; 1000];
        for _ in 0..2000 {
            for a in schedule.next_batch(10) {
                seen[a] += 1;
            }
        }
        assert_eq!(schedule.epochs(), 20);
        assert!(seen.iter().all(|&c| c == 20));
    }

    #[test]
    fn batches_wrap_across_epochs() {
        let mut schedule = AnchorSchedule::new(3, seeded(0)).unwrap();
        let first = schedule.next_batch(2);
        let second = schedule.next_batch(2);
        assert_eq!(schedule.epochs(), 2);
        let mut epoch: Vec<usize> = first.iter().chain(&second[..1]).copied().collect();
        epoch.sort_unstable();
        assert_eq!(epoch, vec![0, 1, 2]);
    }

    #[test]
    fn exact_step_count_and_determinism() {
        let data = toy_dataset(7, 20);
        let config = TrainConfig {
            total_steps: Some(12),
            batch_size: 3,
            norm_interval: 5,
            ..TrainConfig::new(2, 11)
        };
        let a = train_encoder(&data, tiny_config(), &config).unwrap();
        let b = train_encoder(&data, tiny_config(), &config).unwrap();
        assert_eq!(a.trace.len(), 12);
        assert_eq!(a.params, b.params);
        assert_eq!(a.trace, b.trace);
        let norms: Vec<usize> = a.trace.iter().filter(|e| e.mean_norm.is_some()).map(|e| e.step).collect();
        assert_eq!(norms, vec![5, 10]);
        assert!(a.trace.iter().all(|e| e.loss.is_finite()));
        assert_ne!(a.params, build_encoder(tiny_config(), 11).unwrap());
    }

    #[test]
    fn channel_mismatch_rejected() {
        let data = toy_dataset(3, 10);
        let config = tiny_config().with_in_channels(2);
        assert!(train_encoder(&data, config, &TrainConfig::new(1, 0)).is_err());
    }

    #[test]
    fn combined_concatenates_solo_outputs() {
        let data = toy_dataset(5, 16);
        let base = TrainConfig {
            total_steps: Some(3),
            batch_size: 2,
            ..TrainConfig::new(1, 40)
        };
        let outs = train_combined(&data, tiny_config(), &[1, 2, 5, 10], &base).unwrap();
        let encoders: Vec<_> = outs.into_iter().map(|o| o.params).collect();
        let rows = encode_combined(&encoders, data.series()).unwrap();
        assert_eq!(rows[0].len(), 4 * 3);
        for (i, e) in encoders.iter().enumerate() {
            let solo = e.encode_batch(data.series()).unwrap();
            for (row, s) in rows.iter().zip(&solo) {
                assert_eq!(&row[i * 3..(i + 1) * 3], &s[..]);
            }
        }
        let single = train_combined(&data, tiny_config(), &[2], &TrainConfig { k: 2, ..base.clone() }).unwrap();
        let solo = train_encoder(&data, tiny_config(), &TrainConfig { k: 2, ..base }).unwrap();
        assert_eq!(single[0].params, solo.params);
    }

    #[test]
    fn norm_of_zeroed_encoder_and_linear_scaling() {
        let data = toy_dataset(4, 12);
        let mut params = build_encoder(tiny_config(), 5).unwrap();
        let base = mean_representation_norm(&params, data.series()).unwrap();
        assert!(base > 0.0);
        let mut doubled = params.clone();
        doubled.linear.weight.value.iter_mut().for_each(|w| *w *= 2.0);
        let twice = mean_representation_norm(&doubled, data.series()).unwrap();
        assert!((twice - 2.0 * base).abs() <= 1e-12 * base);

        // Direction tensors stay nonzero so that weight normalization is defined.
        for b in &mut params.blocks {
            for c in [&mut b.conv1, &mut b.conv2] {
                c.g.value.fill(0.0);
                c.bias.value.fill(0.0);
            }
            if let Some(p) = &mut b.projection {
                p.weight.value.fill(0.0);
                p.bias.value.fill(0.0);
            }
        }
        params.linear.weight.value.fill(0.0);
        params.linear.bias.value.fill(0.0);
        assert_eq!(mean_representation_norm(&params, data.series()).unwrap(), 0.0);
    }

    #[test]
    fn trace_csv_layout() {
        let trace = [
            TraceEntry { step: 1, loss: 0.5, mean_norm: None },
            TraceEntry { step: 2, loss: 0.25, mean_norm: Some(3.0) },
        ];
        let mut out = Vec::new();
        write_trace_csv(&trace, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "step,loss,mean_norm\n1,0.5,\n2,0.25,3\n");
    }
}
