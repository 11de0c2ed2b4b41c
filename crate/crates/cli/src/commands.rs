use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use tsrep::data::{
    load_long_series, mean_discrepancy_targets, normalize, window_starts, NormStats, TimeSeriesDataset, DAY_WINDOW,
};
use tsrep::encoder::{save_model, EncoderParams};
use tsrep::eval::{
    accuracy, dtw_classify, fit_svm, kmeans, knn1_classify, linreg_mse, linreg_train, sparse_label_protocol,
    stable_learning_rate, RegressionProbe, ReportRow, REPORT_HEADER,
};
use tsrep::nn::Tensor3;
use tsrep::trainer::{encode_combined, train_combined, train_encoder, write_trace_csv, TrainConfig, TrainOutput};
use tsrep::Error;

use crate::config::{parse_ks, parse_window, RunConfig};
use crate::io::{load_dataset, load_models, output, read_matrix, trace_path, with_suffix, write_matrix};
use crate::{Classifier, Cli, Command, TrainArgs};

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T = ()> = Result<T, Failure>;

/// Usage and input problems exit with 1, failures while running with 2.
trait ExitCode<T> {
    fn usage(self) -> Outcome<T>;
    fn runtime(self) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> ExitCode<T> for Result<T, E> {
    fn usage(self) -> Outcome<T> {
        self.map_err(|e| Failure { code: 1, error: e.into() })
    }

    fn runtime(self) -> Outcome<T> {
        self.map_err(|e| Failure { code: 2, error: e.into() })
    }
}

fn required(path: Option<PathBuf>, fallback: &Option<PathBuf>, what: &str) -> Outcome<PathBuf> {
    path.or_else(|| fallback.clone())
        .ok_or_else(|| anyhow!("no {what} given"))
        .usage()
}

pub fn run(cli: Cli) -> Outcome {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p).usage()?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(anyhow!("--threads must be at least 1")).usage();
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().runtime()?;
    }
    match cli.command {
        Command::Train { data, train, out, trace } => {
            apply_train_args(&mut config, &train)?;
            cmd_train(&config, data, out, trace)
        }
        Command::Encode {
            models,
            data,
            norm_from,
            out,
        } => cmd_encode(&config, &models, data, norm_from, out),
        Command::Eval {
            train,
            test,
            classifier,
            models,
            train_repr,
            test_repr,
            label_fraction,
            variant,
            out,
        } => {
            if label_fraction.is_some() {
                config.label_fraction = label_fraction;
            }
            let features = match (train_repr, test_repr) {
                (Some(a), Some(b)) => Features::Precomputed(a, b),
                _ if !models.is_empty() => Features::Models(models),
                _ => Features::Raw,
            };
            cmd_eval(&config, train, test, classifier, features, variant, out)
        }
        Command::Cluster {
            models,
            series,
            window,
            clusters,
            stride,
            out,
        } => {
            apply_window_args(&mut config, window, stride)?;
            if let Some(c) = clusters {
                config.clusters = c;
            }
            cmd_cluster(&config, &models, &series, out)
        }
        Command::Regress {
            models,
            series,
            window,
            stride,
            train_len,
            out,
        } => {
            apply_window_args(&mut config, window, stride)?;
            if let Some(t) = train_len {
                config.train_len = t;
            }
            cmd_regress(&config, &models, &series, out)
        }
        Command::Benchmark {
            train,
            test,
            train_args,
            classifier,
            label_fraction,
            dtw,
            out,
        } => {
            apply_train_args(&mut config, &train_args)?;
            if label_fraction.is_some() {
                config.label_fraction = label_fraction;
            }
            cmd_benchmark(&config, train, test, classifier, dtw, out)
        }
    }
}

fn apply_train_args(config: &mut RunConfig, args: &TrainArgs) -> Outcome {
    if let Some(k) = &args.k {
        config.ks = parse_ks(k).usage()?;
    }
    if args.steps.is_some() {
        config.steps = args.steps;
    }
    if let Some(b) = args.batch {
        if b == 0 {
            return Err(anyhow!("--batch must be at least 1")).usage();
        }
        config.batch_size = b;
    }
    Ok(())
}

fn apply_window_args(config: &mut RunConfig, window: Option<String>, stride: Option<usize>) -> Outcome {
    if let Some(w) = window {
        config.window = Some(parse_window(&w).usage()?);
    }
    if let Some(s) = stride {
        if s == 0 {
            return Err(anyhow!("--stride must be at least 1")).usage();
        }
        config.stride = Some(s);
    }
    Ok(())
}

fn train_config(config: &RunConfig, k: usize) -> TrainConfig {
    TrainConfig {
        batch_size: config.batch_size,
        total_steps: config.steps,
        length_mode: config.length_mode,
        backprop: config.backprop,
        ..TrainConfig::new(k, config.seed)
    }
}

fn train_models(config: &RunConfig, dataset: &TimeSeriesDataset) -> Outcome<Vec<TrainOutput>> {
    let encoder = config.encoder.with_in_channels(dataset.channels());
    let base = train_config(config, config.ks[0]);
    if config.ks.len() == 1 {
        Ok(vec![train_encoder(dataset, encoder, &base).runtime()?])
    } else {
        train_combined(dataset, encoder, &config.ks, &base).runtime()
    }
}

fn cmd_train(config: &RunConfig, data: Option<PathBuf>, out: Option<PathBuf>, trace: Option<PathBuf>) -> Outcome {
    let data = required(data, &config.train, "training dataset")?;
    let out = required(out, &config.out, "output model path (--out)")?;
    let trace = trace.or_else(|| config.trace.clone());
    let dataset = load_dataset(&data).usage()?;
    let dataset = if config.normalize { normalize(&dataset).0 } else { dataset };
    let outputs = train_models(config, &dataset)?;
    let combined = config.ks.len() > 1;
    for (k, trained) in config.ks.iter().zip(&outputs) {
        let suffix = format!("-k{k}");
        let model_path = if combined { with_suffix(&out, &suffix) } else { out.clone() };
        save_model(&trained.params, &model_path).runtime()?;
        let trace_file = match &trace {
            Some(t) if combined => with_suffix(t, &suffix),
            Some(t) => t.clone(),
            None => trace_path(&model_path),
        };
        let file = File::create(&trace_file)
            .with_context(|| format!("creating {}", trace_file.display()))
            .runtime()?;
        write_trace_csv(&trained.trace, BufWriter::new(file)).runtime()?;
        log::info!(
            "K={k}: final loss {:.5}; wrote {} and {}",
            trained.trace.last().map_or(f64::NAN, |e| e.loss),
            model_path.display(),
            trace_file.display()
        );
    }
    Ok(())
}

/// Applies the statistics of `reference` (or of `dataset` itself) when normalization is on.
fn normalized(config: &RunConfig, dataset: &TimeSeriesDataset, reference: Option<&TimeSeriesDataset>) -> Outcome<TimeSeriesDataset> {
    if !config.normalize {
        return Ok(dataset.clone());
    }
    let reference = reference.unwrap_or(dataset);
    if reference.channels() != dataset.channels() {
        return Err(anyhow!(
            "normalization reference has {} channels, dataset has {}",
            reference.channels(),
            dataset.channels()
        ))
        .runtime();
    }
    Ok(NormStats::compute(reference).apply(dataset))
}

fn check_channels(models: &[EncoderParams], channels: usize) -> Outcome {
    let expected = models[0].config.in_channels;
    if expected != channels {
        return Err(anyhow!("models expect {expected} input channels, dataset has {channels}")).runtime();
    }
    Ok(())
}

fn cmd_encode(
    config: &RunConfig,
    models: &[PathBuf],
    data: Option<PathBuf>,
    norm_from: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Outcome {
    let models = load_models(models).usage()?;
    let data = required(data, &config.train, "dataset")?;
    let dataset = load_dataset(&data).usage()?;
    let reference = norm_from.map(|p| load_dataset(&p)).transpose().usage()?;
    check_channels(&models, dataset.channels())?;
    let dataset = normalized(config, &dataset, reference.as_ref())?;
    let rows = encode_combined(&models, dataset.series()).runtime()?;
    let mut sink = output(out.or_else(|| config.out.clone()).as_deref()).runtime()?;
    write_matrix(&mut *sink, &rows).runtime()
}

enum Features {
    Raw,
    Models(Vec<PathBuf>),
    Precomputed(PathBuf, PathBuf),
}

/// Flattened values of equal-length series.
fn raw_features(dataset: &TimeSeriesDataset) -> Outcome<Vec<Vec<f64>>> {
    let lengths = dataset.lengths();
    if lengths.windows(2).any(|w| w[0] != w[1]) {
        return Err(anyhow!("raw-value classifiers need equal-length series")).runtime();
    }
    Ok(dataset.series().iter().map(|s| s.data().to_vec()).collect())
}

fn classifier_name(c: Classifier) -> &'static str {
    match c {
        Classifier::Svm => "svm",
        Classifier::Knn1 => "knn1",
        Classifier::Dtw => "dtw",
    }
}

/// Trains `classifier` on the rows of `train_x` picked by `subset` and
/// predicts `test_x`.
fn classify(
    classifier: Classifier,
    train_x: &[Vec<f64>],
    train_y: &[String],
    subset: &[usize],
    test_x: &[Vec<f64>],
) -> Outcome<Vec<String>> {
    let x: Vec<Vec<f64>> = subset.iter().map(|&i| train_x[i].clone()).collect();
    let y: Vec<String> = subset.iter().map(|&i| train_y[i].clone()).collect();
    match classifier {
        Classifier::Svm => {
            let (clf, c) = fit_svm(&x, &y).runtime()?;
            log::info!("SVM penalty C={c}");
            Ok(clf.predict(test_x))
        }
        Classifier::Knn1 => knn1_classify(&x, &y, test_x).runtime(),
        Classifier::Dtw => unreachable!("DTW classifies series, not feature rows"),
    }
}

fn labeled_pair(config: &RunConfig, train: Option<PathBuf>, test: Option<PathBuf>) -> Outcome<(TimeSeriesDataset, TimeSeriesDataset)> {
    let train = required(train, &config.train, "training dataset")?;
    let test = required(test, &config.test, "test dataset")?;
    let train = load_dataset(&train).usage()?;
    let test = load_dataset(&test).usage()?;
    train.require_labels().usage()?;
    test.require_labels().usage()?;
    let test = normalized(config, &test, Some(&train))?;
    let train = normalized(config, &train, None)?;
    Ok((train, test))
}

fn label_subset(config: &RunConfig, labels: &[String]) -> Outcome<Vec<usize>> {
    match config.label_fraction {
        Some(f) => sparse_label_protocol(labels, f, config.seed).usage(),
        None => Ok((0..labels.len()).collect()),
    }
}

fn dtw_row(train: &TimeSeriesDataset, test: &TimeSeriesDataset, subset: &[usize]) -> Outcome<ReportRow> {
    let start = Instant::now();
    let labels = train.require_labels().usage()?;
    let series: Vec<Tensor3> = subset.iter().map(|&i| train.series()[i].clone()).collect();
    let y: Vec<String> = subset.iter().map(|&i| labels[i].clone()).collect();
    let pred = dtw_classify(&series, &y, test.series()).runtime()?;
    Ok(ReportRow {
        dataset: train.name.clone(),
        variant: "raw".into(),
        classifier: "dtw".into(),
        accuracy: accuracy(&pred, test.require_labels().usage()?).runtime()?,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn cmd_eval(
    config: &RunConfig,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    classifier: Classifier,
    features: Features,
    variant: Option<String>,
    out: Option<PathBuf>,
) -> Outcome {
    let (train, test) = labeled_pair(config, train, test)?;
    let train_y = train.require_labels().usage()?;
    let subset = label_subset(config, train_y)?;
    let mut row = if classifier == Classifier::Dtw {
        dtw_row(&train, &test, &subset)?
    } else {
        let (default_variant, train_x, test_x, mut seconds) = match features {
            Features::Raw => ("raw", raw_features(&train)?, raw_features(&test)?, 0.0),
            Features::Precomputed(a, b) => {
                let (a, b) = (read_matrix(&a).usage()?, read_matrix(&b).usage()?);
                if a.len() != train.len() || b.len() != test.len() {
                    return Err(anyhow!(
                        "representation files hold {} and {} rows for datasets of {} and {} series",
                        a.len(),
                        b.len(),
                        train.len(),
                        test.len()
                    ))
                    .usage();
                }
                ("repr", a, b, 0.0)
            }
            Features::Models(paths) => {
                let models = load_models(&paths).usage()?;
                check_channels(&models, train.channels())?;
                let start = Instant::now();
                let a = encode_combined(&models, train.series()).runtime()?;
                let b = encode_combined(&models, test.series()).runtime()?;
                let name = if models.len() > 1 { "combined" } else { "encoder" };
                (name, a, b, start.elapsed().as_secs_f64())
            }
        };
        let start = Instant::now();
        let pred = classify(classifier, &train_x, train_y, &subset, &test_x)?;
        seconds += start.elapsed().as_secs_f64();
        ReportRow {
            dataset: train.name.clone(),
            variant: default_variant.into(),
            classifier: classifier_name(classifier).into(),
            accuracy: accuracy(&pred, test.require_labels().usage()?).runtime()?,
            seconds,
        }
    };
    if let Some(v) = variant {
        row.variant = v;
    } else if let Some(f) = config.label_fraction {
        row.variant = format!("{}-labels{f}", row.variant);
    }
    let mut sink = output(out.as_deref()).runtime()?;
    writeln!(sink, "{row}").and_then(|_| sink.flush()).runtime()
}

fn long_values(path: &Path) -> Outcome<Vec<f64>> {
    let series = load_long_series(path)
        .with_context(|| format!("loading {}", path.display()))
        .usage()?;
    if series.imputed > 0 {
        log::info!("filled {} missing readings", series.imputed);
    }
    Ok(series.values)
}

fn window_tensors(values: &[f64], starts: &[usize], width: usize) -> Outcome<Vec<Tensor3>> {
    starts
        .iter()
        .map(|&s| Tensor3::from_vec(1, 1, width, values[s..s + width].to_vec()))
        .collect::<Result<_, Error>>()
        .runtime()
}

fn cmd_cluster(config: &RunConfig, models: &[PathBuf], series: &Path, out: Option<PathBuf>) -> Outcome {
    let models = load_models(models).usage()?;
    check_channels(&models, 1)?;
    let mut values = long_values(series)?;
    if config.normalize {
        values = NormStats::of_values(&values).apply_values(&values);
    }
    let width = config.window.unwrap_or(DAY_WINDOW);
    let stride = config.stride.unwrap_or(width);
    let starts = window_starts(values.len(), width, stride).runtime()?;
    let windows = window_tensors(&values, &starts, width)?;
    let reprs = encode_combined(&models, &windows).runtime()?;
    let result = kmeans(&reprs, config.clusters, config.seed).runtime()?;
    log::info!("{} windows, inertia {:.4}", windows.len(), result.inertia);
    let mut sink = output(out.or_else(|| config.out.clone()).as_deref()).runtime()?;
    let mut write = || -> std::io::Result<()> {
        writeln!(sink, "start,cluster")?;
        for (s, c) in starts.iter().zip(&result.assignments) {
            writeln!(sink, "{s},{c}")?;
        }
        sink.flush()
    };
    write().runtime()
}

/// Windows whose next-period target exists, with those targets.
fn regression_samples(values: &[f64], width: usize, stride: usize) -> Outcome<(Vec<usize>, Vec<f64>)> {
    let targets = mean_discrepancy_targets(values, width).runtime()?;
    let starts = window_starts(values.len() - width, width, stride).runtime()?;
    // The target of the window starting at s sits at step s + width − 1.
    let y = starts.iter().map(|&s| targets[s].1).collect();
    Ok((starts, y))
}

/// Trains a probe at `lr`, retrying at the divergence-free rate if it blows up.
fn fit_probe(x: &[Vec<f64>], y: &[f64], steps: usize, lr: f64) -> Outcome<RegressionProbe> {
    match linreg_train(x, y, steps, lr) {
        Err(Error::Divergence { step, .. }) => {
            let safe = stable_learning_rate(x[0].len(), lr);
            log::warn!("probe diverged at step {step} with learning rate {lr}; retrying with {safe}");
            linreg_train(x, y, steps, safe).runtime()
        }
        other => other.runtime(),
    }
}

fn cmd_regress(config: &RunConfig, models: &[PathBuf], series: &Path, out: Option<PathBuf>) -> Outcome {
    let models = load_models(models).usage()?;
    check_channels(&models, 1)?;
    let values = long_values(series)?;
    if values.len() < config.train_len {
        return Err(anyhow!(
            "series of length {} is shorter than the {}-step training prefix",
            values.len(),
            config.train_len
        ))
        .runtime();
    }
    let (train, test) = values.split_at(config.train_len);
    let (train, test) = if config.normalize {
        let stats = NormStats::of_values(train);
        (stats.apply_values(train), stats.apply_values(test))
    } else {
        (train.to_vec(), test.to_vec())
    };
    let width = config.window.unwrap_or(DAY_WINDOW);
    let stride = config.stride.unwrap_or(width);
    let (train_starts, train_y) = regression_samples(&train, width, stride)?;
    let (test_starts, test_y) = regression_samples(&test, width, stride)?;
    let train_w = window_tensors(&train, &train_starts, width)?;
    let test_w = window_tensors(&test, &test_starts, width)?;

    let train_repr = encode_combined(&models, &train_w).runtime()?;
    let test_repr = encode_combined(&models, &test_w).runtime()?;
    let raw = |w: &[Tensor3]| -> Vec<Vec<f64>> { w.iter().map(|t| t.data().to_vec()).collect() };
    let (train_raw, test_raw) = (raw(&train_w), raw(&test_w));

    let mut results = Vec::new();
    for (name, tx, vx) in [("representation", &train_repr, &test_repr), ("raw", &train_raw, &test_raw)] {
        let start = Instant::now();
        let probe = fit_probe(tx, &train_y, config.probe_steps, config.probe_lr)?;
        let seconds = start.elapsed().as_secs_f64();
        let mse = linreg_mse(&probe, vx, &test_y).runtime()?;
        results.push((name, tx[0].len(), mse, seconds));
    }
    let mut sink = output(out.or_else(|| config.out.clone()).as_deref()).runtime()?;
    let mut write = || -> std::io::Result<()> {
        writeln!(sink, "features,dimension,test_mse,train_seconds")?;
        for (name, dim, mse, secs) in &results {
            writeln!(sink, "{name},{dim},{mse},{secs:.3}")?;
        }
        sink.flush()
    };
    write().runtime()
}

fn cmd_benchmark(
    config: &RunConfig,
    train: Option<PathBuf>,
    test: Option<PathBuf>,
    classifier: Classifier,
    dtw: bool,
    out: Option<PathBuf>,
) -> Outcome {
    if classifier == Classifier::Dtw {
        return Err(anyhow!("benchmark classifies representations; use --dtw for the DTW baseline")).usage();
    }
    let (train, test) = labeled_pair(config, train, test)?;
    let train_y = train.require_labels().usage()?;
    let subset = label_subset(config, train_y)?;
    let start = Instant::now();
    let outputs = train_models(config, &train)?;
    let models: Vec<EncoderParams> = outputs.into_iter().map(|o| o.params).collect();
    let train_x = encode_combined(&models, train.series()).runtime()?;
    let test_x = encode_combined(&models, test.series()).runtime()?;
    let pred = classify(classifier, &train_x, train_y, &subset, &test_x)?;
    let ks: Vec<String> = config.ks.iter().map(usize::to_string).collect();
    let variant = if ks.len() > 1 { "combined" } else { "encoder" };
    let mut rows = vec![ReportRow {
        dataset: train.name.clone(),
        variant: format!("{variant}-k{}", ks.join("+")),
        classifier: classifier_name(classifier).into(),
        accuracy: accuracy(&pred, test.require_labels().usage()?).runtime()?,
        seconds: start.elapsed().as_secs_f64(),
    }];
    if dtw {
        rows.push(dtw_row(&train, &test, &subset)?);
    }
    let mut sink = output(out.as_deref()).runtime()?;
    let mut write = || -> std::io::Result<()> {
        writeln!(sink, "{REPORT_HEADER}")?;
        for row in &rows {
            writeln!(sink, "{row}")?;
        }
        sink.flush()
    };
    write().runtime()
}
