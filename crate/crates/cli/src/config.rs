//! `key = value` run configuration with `#` comments.

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use tsrep::data::{DAY_WINDOW, QUARTER_WINDOW};
use tsrep::encoder::EncoderConfig;
use tsrep::triplet::{BackpropMode, LengthMode};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub encoder: EncoderConfig,
    /// One entry trains a single encoder; several train the combined variant.
    pub ks: Vec<usize>,
    pub batch_size: usize,
    /// `None` uses 2000 steps for K ≥ 10 and 1500 otherwise.
    pub steps: Option<usize>,
    pub seed: u64,
    pub length_mode: Option<LengthMode>,
    pub backprop: Option<BackpropMode>,
    pub normalize: bool,
    pub label_fraction: Option<f64>,
    pub clusters: usize,
    pub window: Option<usize>,
    pub stride: Option<usize>,
    pub probe_steps: usize,
    pub probe_lr: f64,
    pub train_len: usize,
    pub train: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub trace: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            encoder: EncoderConfig::default(),
            ks: vec![tsrep::trainer::UNIVARIATE_KS[2]],
            batch_size: 10,
            steps: None,
            seed: 0,
            length_mode: None,
            backprop: None,
            normalize: true,
            label_fraction: None,
            clusters: 6,
            window: None,
            stride: None,
            probe_steps: tsrep::eval::linreg::DEFAULT_STEPS,
            probe_lr: tsrep::eval::linreg::DEFAULT_LEARNING_RATE,
            train_len: tsrep::data::IHEPC_TRAIN_LEN,
            train: None,
            test: None,
            out: None,
            trace: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("invalid value {value:?} for {key}: {e}"))
}

/// `5` or `1,2,5,10`.
pub fn parse_ks(value: &str) -> Result<Vec<usize>> {
    let ks = value
        .split(',')
        .map(|v| parse::<usize>("k", v.trim()))
        .collect::<Result<Vec<_>>>()?;
    if ks.is_empty() || ks.contains(&0) {
        bail!("k must list positive negative-sample counts, got {value:?}");
    }
    Ok(ks)
}

/// `day`, `quarter`, or an explicit width.
pub fn parse_window(value: &str) -> Result<usize> {
    match value {
        "day" => Ok(DAY_WINDOW),
        "quarter" => Ok(QUARTER_WINDOW),
        v => match parse::<usize>("window", v)? {
            0 => bail!("window width must be at least 1"),
            w => Ok(w),
        },
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        v => bail!("invalid value {v:?} for {key}: expected true or false"),
    }
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key = value", idx + 1))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                bail!("line {}: {key} is set twice", idx + 1);
            }
            config.set(key, value).with_context(|| format!("line {}", idx + 1))?;
        }
        config.encoder.validate()?;
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let e = &mut self.encoder;
        match key {
            "channels" => e.channels = parse(key, value)?,
            "depth" => e.depth = parse(key, value)?,
            "pre_pool_channels" => e.pre_pool_channels = parse(key, value)?,
            "repr_dim" => e.repr_dim = parse(key, value)?,
            "kernel_size" => e.kernel_size = parse(key, value)?,
            "leaky_slope" => e.leaky_slope = parse(key, value)?,
            "k" => self.ks = parse_ks(value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "steps" => self.steps = Some(parse(key, value)?),
            "seed" => self.seed = parse(key, value)?,
            "length_mode" => {
                self.length_mode = match value {
                    "auto" => None,
                    "fixed" => Some(LengthMode::Fixed),
                    "varying" => Some(LengthMode::Varying),
                    v => bail!("invalid value {v:?} for length_mode: expected auto, fixed or varying"),
                }
            }
            "backprop" => {
                self.backprop = match value {
                    "auto" => None,
                    "joint" => Some(BackpropMode::Joint),
                    "per_term" => Some(BackpropMode::PerTerm),
                    v => bail!("invalid value {v:?} for backprop: expected auto, joint or per_term"),
                }
            }
            "normalize" => self.normalize = parse_bool(key, value)?,
            "label_fraction" => self.label_fraction = Some(parse(key, value)?),
            "clusters" => self.clusters = parse(key, value)?,
            "window" => self.window = Some(parse_window(value)?),
            "stride" => self.stride = Some(parse(key, value)?),
            "probe_steps" => self.probe_steps = parse(key, value)?,
            "probe_lr" => self.probe_lr = parse(key, value)?,
            "train_len" => self.train_len = parse(key, value)?,
            "train" => self.train = Some(value.into()),
            "test" => self.test = Some(value.into()),
            "out" => self.out = Some(value.into()),
            "trace" => self.trace = Some(value.into()),
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }
}
