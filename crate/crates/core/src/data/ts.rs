//! `.ts` files of the multivariate archive.
//!
//! A header of `@key value` lines ends with `@data`; each data line holds the
//! dimensions separated by `:` (values comma-separated inside a dimension),
//! with the class token as the last `:` field when `@classLabel true`.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TimeSeriesDataset;
use crate::error::{Error, ParseError, Result};
use crate::nn::Tensor3;

pub fn load_ts(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ts(&text)
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    ParseError::Format {
        line,
        message: message.into(),
    }
    .into()
}

fn parse_bool(line: usize, key: &str, v: Option<&str>) -> Result<bool> {
    match v.map(str::to_ascii_lowercase).as_deref() {
        Some("true") => Ok(true),
        Some("false") => Ok(false),
        other => Err(format_err(line, format!("@{key} expects true/false, got {other:?}"))),
    }
}

pub fn parse_ts(text: &str) -> Result<TimeSeriesDataset> {
    let mut name = String::from("dataset");
    let mut univariate: Option<bool> = None;
    let mut dimensions: Option<usize> = None;
    let mut class_labels: Option<Vec<String>> = None;
    let mut lines = text.lines().enumerate();
    let mut saw_data = false;

    for (idx, raw) in lines.by_ref() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !line.starts_with('@') {
            return Err(format_err(lineno, "data line before @data"));
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default()[1..].to_ascii_lowercase();
        match key.as_str() {
            "data" => {
                saw_data = true;
                break;
            }
            "problemname" => name = parts.collect::<Vec<_>>().join(" "),
            "univariate" => univariate = Some(parse_bool(lineno, &key, parts.next())?),
            "dimensions" => {
                let v = parts.next().and_then(|v| v.parse().ok());
                dimensions = Some(v.ok_or_else(|| format_err(lineno, "@dimensions expects a count"))?);
            }
            "classlabel" => {
                if parse_bool(lineno, &key, parts.next())? {
                    class_labels = Some(parts.map(str::to_string).collect());
                }
            }
            "missing" => {
                if parse_bool(lineno, &key, parts.next())? {
                    return Err(format_err(lineno, "series with missing values are not supported"));
                }
            }
            // Informational keys that do not change parsing.
            _ => {}
        }
    }
    if !saw_data {
        return Err(ParseError::MissingData.into());
    }

    let mut series = Vec::new();
    let mut labels = Vec::new();
    let mut dims_seen: Option<usize> = None;
    for (idx, raw) in lines {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields: Vec<&str> = line.split(':').collect();
        if let Some(declared) = &class_labels {
            let token = fields.pop().unwrap_or_default().trim();
            if !declared.iter().any(|c| c == token) {
                return Err(ParseError::UnknownClass {
                    line: lineno,
                    token: token.to_string(),
                }
                .into());
            }
            labels.push(token.to_string());
        }
        if fields.is_empty() {
            return Err(format_err(lineno, "no dimensions"));
        }
        let dims = fields.len();
        if univariate == Some(true) && dims != 1 {
            return Err(format_err(lineno, format!("@univariate true but {dims} dimensions")));
        }
        if let Some(d) = dimensions {
            if dims != d {
                return Err(format_err(lineno, format!("@dimensions {d} but {dims} dimensions")));
            }
        }
        match dims_seen {
            Some(d) if d != dims => {
                return Err(format_err(lineno, format!("{dims} dimensions, earlier series had {d}")));
            }
            _ => dims_seen = Some(dims),
        }
        let mut rows = Vec::with_capacity(dims);
        for f in fields {
            let row = f
                .split(',')
                .map(|v| {
                    let v = v.trim();
                    v.parse::<f64>()
                        .ok()
                        .filter(|x| !x.is_nan())
                        .ok_or_else(|| ParseError::NonNumeric {
                            line: lineno,
                            value: v.to_string(),
                        })
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push(row);
        }
        if rows.iter().any(|r| r.len() != rows[0].len()) {
            return Err(ParseError::RaggedDimensions { line: lineno }.into());
        }
        series.push(Tensor3::from_channels(&rows)?);
    }
    if series.is_empty() {
        return Err(ParseError::Empty.into());
    }
    TimeSeriesDataset::new(name, series, class_labels.map(|_| labels))
}

/// Serializes a dataset so that [`parse_ts`] reads it back unchanged.
pub fn write_ts(dataset: &TimeSeriesDataset) -> String {
    let mut out = String::new();
    let channels = dataset.channels();
    let lengths = dataset.lengths();
    let equal = lengths.windows(2).all(|w| w[0] == w[1]);
    let _ = writeln!(out, "@problemName {}", dataset.name);
    let _ = writeln!(out, "@timeStamps false");
    let _ = writeln!(out, "@missing false");
    let _ = writeln!(out, "@univariate {}", channels == 1);
    let _ = writeln!(out, "@dimensions {channels}");
    let _ = writeln!(out, "@equalLength {equal}");
    if equal {
        let _ = writeln!(out, "@seriesLength {}", lengths.first().copied().unwrap_or(0));
    }
    match dataset.labels() {
        Some(labels) => {
            let classes: BTreeSet<&str> = labels.iter().map(String::as_str).collect();
            let _ = writeln!(out, "@classLabel true {}", classes.into_iter().collect::<Vec<_>>().join(" "));
        }
        None => {
            let _ = writeln!(out, "@classLabel false");
        }
    }
    let _ = writeln!(out, "@data");
    for (i, s) in dataset.series().iter().enumerate() {
        let dims: Vec<String> = s
            .data()
            .chunks_exact(s.time())
            .map(|row| row.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
            .collect();
        out.push_str(&dims.join(":"));
        if let Some(labels) = dataset.labels() {
            out.push(':');
            out.push_str(&labels[i]);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "@problemName toy\n@univariate false\n@dimensions 2\n@classLabel true A B\n@data\n";

    #[test]
    fn two_dimensional_line() {
        let d = parse_ts(&format!("{HEADER}1,2:3,4:A\n")).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.channels(), 2);
        assert_eq!(d.series()[0].data(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(d.labels().unwrap(), &["A".to_string()]);
        assert_eq!(d.name, "toy");
    }

    #[test]
    fn univariate_flag_with_two_dims() {
        let text = "@univariate true\n@classLabel true A\n@data\n1,2:3,4:A\n";
        assert!(matches!(parse_ts(text), Err(Error::Parse(ParseError::Format { line: 4, .. }))));
    }

    #[test]
    fn distinct_errors() {
        assert!(matches!(parse_ts("@problemName x\n"), Err(Error::Parse(ParseError::MissingData))));
        assert!(matches!(
            parse_ts(&format!("{HEADER}1,2:3:A\n")),
            Err(Error::Parse(ParseError::RaggedDimensions { line: 6 }))
        ));
        assert!(matches!(
            parse_ts(&format!("{HEADER}1,2:3,4:C\n")),
            Err(Error::Parse(ParseError::UnknownClass { line: 6, .. }))
        ));
        assert!(matches!(parse_ts(HEADER), Err(Error::Parse(ParseError::Empty))));
    }

    #[test]
    fn round_trip_through_writer() {
        let text = format!("{HEADER}1,2.5,-3:0.125,4,5e-9:B\n7:8:A\n");
        let d = parse_ts(&text).unwrap();
        assert_eq!(d.lengths(), vec![3, 1]);
        let back = parse_ts(&write_ts(&d)).unwrap();
        assert_eq!(back, d);

        let unlabeled = TimeSeriesDataset::univariate("u", vec![vec![0.1, 0.2], vec![1.0 / 3.0]], None).unwrap();
        assert_eq!(parse_ts(&write_ts(&unlabeled)).unwrap(), unlabeled);
    }
}
