//! The household power consumption file: semicolon-separated, one row per
//! minute, `?` for missing readings.

use std::fs;
use std::path::Path;

use crate::error::{Error, ParseError, Result};

pub const IHEPC_COLUMN: &str = "Global_active_power";

#[derive(Debug, Clone, PartialEq)]
pub struct LongSeries {
    pub values: Vec<f64>,
    /// Number of missing readings that were filled in.
    pub imputed: usize,
}

pub fn load_ihepc(path: impl AsRef<Path>) -> Result<LongSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ihepc(&text)
}

/// Extracts the active-power column. A gap takes the last valid reading
/// before it; a leading gap takes the first valid reading.
pub fn parse_ihepc(text: &str) -> Result<LongSeries> {
    let mut lines = text.lines().enumerate();
    let header = lines.next().map(|(_, l)| l).unwrap_or_default();
    let column = header
        .split(';')
        .position(|h| h.trim() == IHEPC_COLUMN)
        .ok_or_else(|| ParseError::MissingColumn(IHEPC_COLUMN.into()))?;
    let mut raw: Vec<Option<f64>> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let field = line.split(';').nth(column).map(str::trim).unwrap_or("?");
        raw.push(match field {
            "?" | "" => None,
            f => Some(f.parse().map_err(|_| ParseError::NonNumeric {
                line: idx + 1,
                value: f.to_string(),
            })?),
        });
    }
    fill_gaps(&raw)
}

/// Reads a plain file with one value per line (blank lines skipped).
pub fn parse_values(text: &str) -> Result<LongSeries> {
    let raw = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(idx, l)| match l.trim() {
            "?" => Ok(None),
            v => v.parse().map(Some).map_err(|_| ParseError::NonNumeric {
                line: idx + 1,
                value: v.to_string(),
            }),
        })
        .collect::<Result<Vec<_>, _>>()?;
    fill_gaps(&raw)
}

/// Loads either format, picking the household-power layout when the header
/// names its column.
pub fn load_long_series(path: impl AsRef<Path>) -> Result<LongSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.lines().next().is_some_and(|h| h.contains(IHEPC_COLUMN)) {
        parse_ihepc(&text)
    } else {
        parse_values(&text)
    }
}

fn fill_gaps(raw: &[Option<f64>]) -> Result<LongSeries> {
    let first = raw.iter().flatten().next().copied().ok_or(ParseError::NoValidValues)?;
    let mut last = first;
    let mut imputed = 0;
    let values = raw
        .iter()
        .map(|v| match v {
            Some(x) => {
                last = *x;
                *x
            }
            None => {
                imputed += 1;
                last
            }
        })
        .collect();
    Ok(LongSeries { values, imputed })
}
