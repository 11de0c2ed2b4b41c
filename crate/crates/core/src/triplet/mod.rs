//! Time-based triplet sampling and the negative-sampling loss.

mod backprop;
mod loss;
mod sampling;

pub use backprop::{batch_loss, loss_backprop_through_encoder, BackpropMode, TripletHarness, PER_TERM_LENGTH_THRESHOLD};
pub use loss::{sigmoid, softplus, triplet_loss, triplet_loss_grad, LossValue, TripletGrads};
pub use sampling::{
    negatives_from_single_series, sample_for_anchors, sample_triplets, Interval, LengthMode, Triplet, TripletBatch,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::{build_encoder, EncoderConfig};
    use crate::nn::{gradient_check, GradCheckOptions, Tensor3};
    use crate::rng::seeded;

    fn toy() -> (crate::encoder::EncoderParams, Vec<Tensor3>) {
        let cfg = EncoderConfig {
            in_channels: 1,
            channels: 4,
            depth: 2,
            pre_pool_channels: 6,
            repr_dim: 5,
            ..EncoderConfig::default()
        };
        let params = build_encoder(cfg, 9).unwrap();
        let series = [12usize, 9, 15]
            .iter()
            .enumerate()
            .map(|(i, &l)| {
                let data = (0..l).map(|t| ((t * (i + 2)) as f64 * 0.3 + 0.4).sin()).collect();
                Tensor3::from_vec(1, 1, l, data).unwrap()
            })
            .collect();
        (params, series)
    }

    fn max_rel_diff(a: &crate::encoder::EncoderParams, b: &crate::encoder::EncoderParams) -> f64 {
        a.params()
            .iter()
            .zip(b.params())
            .flat_map(|(p, q)| p.grad.iter().zip(&q.grad).map(|(x, y)| (x - y).abs() / x.abs().max(1e-300).max(y.abs())))
            .filter(|d| d.is_finite())
            .fold(0.0, f64::max)
    }

    #[test]
    fn joint_and_per_term_agree() {
        let (params, series) = toy();
        for k in [1, 3] {
            let lengths: Vec<usize> = series.iter().map(Tensor3::time).collect();
            let batch = sample_triplets(&lengths, k, &mut seeded(k as u64), LengthMode::Varying).unwrap();
            let mut a = params.clone();
            let mut b = params.clone();
            let la = loss_backprop_through_encoder(&mut a, &series, &batch, BackpropMode::Joint).unwrap();
            let lb = loss_backprop_through_encoder(&mut b, &series, &batch, BackpropMode::PerTerm).unwrap();
            assert!((la - lb).abs() <= 1e-12 * la.abs().max(1.0));
            let d = max_rel_diff(&a, &b);
            assert!(d <= 1e-9, "K={k}: {d}");
        }
    }

    #[test]
    fn loss_gradient_through_encoder() {
        let (params, series) = toy();
        let lengths: Vec<usize> = series.iter().map(Tensor3::time).collect();
        let batch = sample_triplets(&lengths, 2, &mut seeded(5), LengthMode::Varying).unwrap();
        for mode in [BackpropMode::Joint, BackpropMode::PerTerm] {
            let mut h = TripletHarness {
                params: params.clone(),
                series: series.clone(),
                batch: batch.clone(),
                mode,
            };
            let err = gradient_check(&mut h, GradCheckOptions::default()).unwrap();
            assert!(err <= 1e-4, "{mode:?}: {err}");
        }
    }

    #[test]
    fn per_term_required_for_multivariate_or_long() {
        let batch = sample_triplets(&[20, 20], 1, &mut seeded(0), LengthMode::Fixed).unwrap();
        assert_eq!(BackpropMode::required(1, &batch), BackpropMode::Joint);
        assert_eq!(BackpropMode::required(3, &batch), BackpropMode::PerTerm);
        let long = sample_triplets(&[30_000], 1, &mut seeded(0), LengthMode::Fixed).unwrap();
        let expect = if long.max_len() > PER_TERM_LENGTH_THRESHOLD { BackpropMode::PerTerm } else { BackpropMode::Joint };
        assert_eq!(BackpropMode::required(1, &long), expect);
    }
}
