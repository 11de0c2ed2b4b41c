use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use tsrep::data::{load_ts, load_ucr_tsv, TimeSeriesDataset};
use tsrep::encoder::{load_model, EncoderParams};

/// `.ts` files use the multivariate reader; anything else is read as a UCR table.
pub fn load_dataset(path: &Path) -> Result<TimeSeriesDataset> {
    let dataset = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("ts")) {
        load_ts(path)
    } else {
        load_ucr_tsv(path)
    };
    dataset.with_context(|| format!("loading dataset {}", path.display()))
}

pub fn load_models(paths: &[PathBuf]) -> Result<Vec<EncoderParams>> {
    if paths.is_empty() {
        bail!("at least one --model is required");
    }
    let models = paths
        .iter()
        .map(|p| load_model(p).with_context(|| format!("loading model {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let channels = models[0].config.in_channels;
    if let Some(p) = paths.iter().zip(&models).find(|(_, m)| m.config.in_channels != channels) {
        bail!(
            "model {} expects {} input channels, {} expects {channels}",
            p.0.display(),
            p.1.config.in_channels,
            paths[0].display()
        );
    }
    Ok(models)
}

/// A file at `path`, or standard output when absent.
pub fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

pub fn write_matrix(out: &mut dyn Write, rows: &[Vec<f64>]) -> Result<()> {
    for row in rows {
        let line: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| format!("{}:{}: expected comma-separated numbers", path.display(), idx + 1))?;
        if rows.first().is_some_and(|r: &Vec<f64>| r.len() != row.len()) {
            bail!("{}:{}: row has {} columns, expected {}", path.display(), idx + 1, row.len(), rows[0].len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{} holds no rows", path.display());
    }
    Ok(rows)
}

/// `model.tsm` with suffix `-k5` becomes `model-k5.tsm`.
pub fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}{suffix}.{}", ext.to_string_lossy()),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// `model.tsm` becomes `model.trace.csv`.
pub fn trace_path(model: &Path) -> PathBuf {
    model.with_extension("trace.csv")
}
