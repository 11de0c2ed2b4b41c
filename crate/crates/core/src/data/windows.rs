use crate::error::{Error, Result};

/// One day of minute-resolution readings.
pub const DAY_WINDOW: usize = 1440;
/// Twelve weeks of minute-resolution readings.
pub const QUARTER_WINDOW: usize = 12 * 7 * 1440;
/// Length of the household-power training prefix.
pub const IHEPC_TRAIN_LEN: usize = 500_000;

/// Start offsets `0, stride, 2·stride, …` of every full window.
pub fn window_starts(len: usize, width: usize, stride: usize) -> Result<Vec<usize>> {
    if width == 0 || stride == 0 {
        return Err(Error::InvalidInput("window width and stride must be at least 1".into()));
    }
    if width > len {
        return Err(Error::InvalidInput(format!("window of {width} exceeds series length {len}")));
    }
    Ok((0..=(len - width) / stride).map(|i| i * stride).collect())
}

pub fn sliding_windows(series: &[f64], width: usize, stride: usize) -> Result<Vec<&[f64]>> {
    Ok(window_starts(series.len(), width, stride)?
        .into_iter()
        .map(|s| &series[s..s + width])
        .collect())
}

/// Regression target at step `t`: mean of the next `period` values minus the
/// mean of the `period` values ending at `t`. Defined for
/// `period - 1 <= t <= len - period - 1`; returns `(t, target)` pairs.
pub fn mean_discrepancy_targets(series: &[f64], period: usize) -> Result<Vec<(usize, f64)>> {
    if period == 0 || series.len() < 2 * period {
        return Err(Error::InvalidInput(format!(
            "series of length {} is shorter than two periods of {period}",
            series.len()
        )));
    }
    let mut prefix = Vec::with_capacity(series.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in series {
        acc += v;
        prefix.push(acc);
    }
    let p = period as f64;
    Ok((period - 1..series.len() - period)
        .map(|t| {
            let past = prefix[t + 1] - prefix[t + 1 - period];
            let next = prefix[t + 1 + period] - prefix[t + 1];
            (t, (next - past) / p)
        })
        .collect())
}

/// First [`IHEPC_TRAIN_LEN`] values for training, the rest for testing.
pub fn split_ihepc(series: &[f64]) -> Result<(&[f64], &[f64])> {
    if series.len() < IHEPC_TRAIN_LEN {
        return Err(Error::InvalidInput(format!(
            "series of length {} is shorter than the {IHEPC_TRAIN_LEN}-step training prefix",
            series.len()
        )));
    }
    Ok(series.split_at(IHEPC_TRAIN_LEN))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counts() {
        let s: Vec<f64> = (0..5).map(f64::from).collect();
        assert_eq!(sliding_windows(&s, 2, 1).unwrap().len(), 4);
        assert_eq!(sliding_windows(&s, 5, 1).unwrap(), vec![&s[..]]);
        assert_eq!(window_starts(10, 4, 3).unwrap(), vec![0, 3, 6]);
        assert!(matches!(sliding_windows(&s, 6, 1), Err(Error::InvalidInput(_))));
        assert_eq!(DAY_WINDOW, 1440);
        assert_eq!(QUARTER_WINDOW, 120_960);
    }

    #[test]
    fn discrepancy_examples() {
        let t = mean_discrepancy_targets(&[1.0, 2.0, 3.0, 4.0], 2).unwrap();
        assert_eq!(t, vec![(1, 2.0)]);
        let t = mean_discrepancy_targets(&[7.0; 30], 5).unwrap();
        assert!(t.iter().all(|&(_, v)| v == 0.0));
        let ramp: Vec<f64> = (0..40).map(|i| 0.5 * i as f64).collect();
        let t = mean_discrepancy_targets(&ramp, 4).unwrap();
        assert_eq!(t.first().unwrap().0, 3);
        assert_eq!(t.last().unwrap().0, 35);
        assert!(t.iter().all(|&(_, v)| (v - 2.0).abs() < 1e-12));
        assert!(mean_discrepancy_targets(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn ihepc_split() {
        let s = vec![0.0; IHEPC_TRAIN_LEN];
        let (train, test) = split_ihepc(&s).unwrap();
        assert_eq!((train.len(), test.len()), (IHEPC_TRAIN_LEN, 0));
        let s: Vec<f64> = (0..IHEPC_TRAIN_LEN + 7).map(|i| i as f64).collect();
        let (train, test) = split_ihepc(&s).unwrap();
        assert_eq!([train, test].concat(), s);
        assert!(split_ihepc(&s[..10]).is_err());
    }
}
