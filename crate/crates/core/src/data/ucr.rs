//! UCR archive files: one series per line, class token first, then values,
//! tab-separated. Variable-length series are padded with trailing `NaN`s.

use std::fs;
use std::path::Path;

use super::TimeSeriesDataset;
use crate::error::{Error, ParseError, Result};

pub fn load_ucr_tsv(path: impl AsRef<Path>) -> Result<TimeSeriesDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .trim_end_matches("_TRAIN")
        .trim_end_matches("_TEST");
    parse_ucr(name, &text)
}

pub fn parse_ucr(name: &str, text: &str) -> Result<TimeSeriesDataset> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        // Older archive releases are comma-separated.
        let sep = if line.contains('\t') { '\t' } else { ',' };
        let mut fields = line.split(sep).map(str::trim);
        let label = fields.next().unwrap_or_default();
        let mut row = Vec::new();
        for f in fields {
            let v: f64 = f.parse().map_err(|_| ParseError::NonNumeric {
                line: lineno,
                value: f.to_string(),
            })?;
            row.push(v);
        }
        while row.last().is_some_and(|v| v.is_nan()) {
            row.pop();
        }
        if row.is_empty() {
            return Err(ParseError::Format {
                line: lineno,
                message: "series has no values".into(),
            }
            .into());
        }
        if row.iter().any(|v| v.is_nan()) {
            return Err(ParseError::InteriorNan { line: lineno }.into());
        }
        labels.push(label.to_string());
        values.push(row);
    }
    if values.is_empty() {
        return Err(ParseError::Empty.into());
    }
    TimeSeriesDataset::univariate(name, values, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_line() {
        let d = parse_ucr("x", "2\t0.5\t-0.5\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.labels().unwrap(), &["2".to_string()]);
        assert_eq!(d.series()[0].data(), &[0.5, -0.5]);
    }

    #[test]
    fn trailing_nan_trimmed() {
        let d = parse_ucr("x", "1\t0.1\t0.2\tNaN\tNaN\n3\t1\t2\t3\t4\n").unwrap();
        assert_eq!(d.lengths(), vec![2, 4]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(parse_ucr("x", ""), Err(Error::Parse(ParseError::Empty))));
        assert!(matches!(parse_ucr("x", "\n  \n"), Err(Error::Parse(ParseError::Empty))));
        assert_eq!(
            parse_ucr("x", "1\t0.1\n1\t0.2\tabc\n").unwrap_err().to_string(),
            ParseError::NonNumeric { line: 2, value: "abc".into() }.to_string()
        );
        assert!(matches!(
            parse_ucr("x", "1\t0.1\tNaN\t0.3\n"),
            Err(Error::Parse(ParseError::InteriorNan { line: 1 }))
        ));
    }

    #[test]
    fn comma_separated_legacy() {
        let d = parse_ucr("x", "1,0.5,0.25\n").unwrap();
        assert_eq!(d.series()[0].data(), &[0.5, 0.25]);
    }
}
