use std::path::Path;

use csv::{ReaderBuilder, Terminator, WriterBuilder};

use super::parse_number;
use crate::error::{Error, Result};
use crate::model::{default_channel_names, MultiChannelSeries};

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::InconsistentColumnCount {
            line: pos.map_or(0, |p| p.line() as usize),
            expected: expected_len as usize,
            found: len as usize,
        },
        other => Error::MalformedLine {
            line: 0,
            content: format!("{other:?}"),
        },
    }
}

/// Numeric CSV. With `has_header`, the first row names the channels.
pub fn read_csv(path: impl AsRef<Path>, has_header: bool) -> Result<MultiChannelSeries> {
    let mut reader = ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let names = if has_header {
        let header = reader.headers().map_err(csv_error)?.clone();
        if header.is_empty() || header.iter().all(str::is_empty) {
            return Err(Error::EmptyFile);
        }
        let names: Vec<String> = header.iter().map(str::to_string).collect();
        if names.iter().any(String::is_empty) {
            return Err(Error::HeaderMismatch(format!("empty column name in {names:?}")));
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::HeaderMismatch(format!("duplicate column name {a:?}")));
            }
        }
        Some(names)
    } else {
        None
    };

    let mut values = Vec::new();
    let mut width = names.as_ref().map(Vec::len);
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| match (csv_error(e), &names) {
            (Error::InconsistentColumnCount { line, found, .. }, Some(n)) => {
                Error::HeaderMismatch(format!("line {line}: {found} fields, header has {}", n.len()))
            }
            (e, _) => e,
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let content = record.iter().collect::<Vec<_>>().join(",");
        match width {
            None => width = Some(record.len()),
            Some(expected) if expected != record.len() => {
                return Err(Error::InconsistentColumnCount {
                    line,
                    expected,
                    found: record.len(),
                })
            }
            _ => {}
        }
        for field in &record {
            values.push(parse_number(field, line, &content)?);
        }
        rows += 1;
    }
    let g = width.filter(|_| rows > 0).ok_or(Error::EmptyFile)?;
    let data = nalgebra::DMatrix::from_row_slice(rows, g, &values);
    MultiChannelSeries::new(data, names.unwrap_or_else(|| default_channel_names(g)))
}

/// Header row of channel names, then one row per sample; LF line endings.
pub fn write_csv(series: &MultiChannelSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = WriterBuilder::new()
        .terminator(Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_error)?;
    writer.write_record(series.channel_names()).map_err(csv_error)?;
    for n in 0..series.len() {
        let row: Vec<String> = series.sample(n).iter().map(|v| format!("{v:?}")).collect();
        writer.write_record(&row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}
