//! Whitespace-delimited sensor blocks: one sample per line, no header,
//! column count fixed by the first line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::parse_number;
use crate::error::{Error, Result};
use crate::model::{default_channel_names, MultiChannelSeries};

/// 20 kHz acquisition.
pub const IMS_SAMPLE_INTERVAL: f64 = 50e-6;

pub fn read_ims_file(path: impl AsRef<Path>) -> Result<MultiChannelSeries> {
    read_ims_str(&fs::read_to_string(path)?)
}

/// Blank lines are skipped; line numbers in errors are 1-based and count them.
pub fn read_ims_str(text: &str) -> Result<MultiChannelSeries> {
    let mut values = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for token in raw.split_whitespace() {
            values.push(parse_number(token, line, raw)?);
        }
        let found = values.len() - before;
        match width {
            None => width = Some(found),
            Some(expected) if expected != found => {
                return Err(Error::InconsistentColumnCount { line, expected, found })
            }
            _ => {}
        }
        rows += 1;
    }
    let g = width.ok_or(Error::EmptyFile)?;
    let data = nalgebra::DMatrix::from_row_slice(rows, g, &values);
    Ok(MultiChannelSeries::new(data, default_channel_names(g))?.with_sample_interval(IMS_SAMPLE_INTERVAL))
}

/// Tab-separated, shortest round-trip representation of each value.
pub fn write_ims(series: &MultiChannelSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut out = String::new();
    for n in 0..series.len() {
        for c in 0..series.channels() {
            if c > 0 {
                out.push('\t');
            }
            write!(out, "{:?}", series.value(n, c)).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}
