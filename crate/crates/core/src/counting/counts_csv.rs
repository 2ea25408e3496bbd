//! `frame,count` CSV files.

use std::io::{Read, Write};
use std::path::Path;

use crate::descriptor::{CountSeries, DescriptorParams};
use crate::error::{Error, Result};

/// Non-fatal observations made while importing counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportNotes {
    /// Lines whose fractional count was rounded half-up.
    pub rounded_lines: Vec<u64>,
}

fn parse_count(field: &str) -> std::result::Result<(u32, bool), String> {
    if let Ok(v) = field.parse::<i64>() {
        if v < 0 {
            return Err(format!("negative count {v}"));
        }
        return u32::try_from(v)
            .map(|c| (c, false))
            .map_err(|_| format!("count {v} is too large"));
    }
    let v: f64 = field.parse().map_err(|_| format!("count `{field}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("count `{field}` is not finite"));
    }
    if v < 0.0 {
        return Err(format!("negative count {v}"));
    }
    let rounded = (v + 0.5).floor();
    if rounded > f64::from(u32::MAX) {
        return Err(format!("count {v} is too large"));
    }
    Ok((rounded as u32, rounded != v))
}

/// Parses a counts CSV. A single-row file cannot reveal its stride, so
/// `default_stride` is used then.
pub fn parse_counts<R: Read>(
    reader: R,
    source_name: &Path,
    default_stride: u64,
    frame_rate: f64,
) -> Result<(CountSeries, ImportNotes)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(source_name, 1, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(frame_col), Some(count_col)) = (col("frame"), col("count")) else {
        return Err(Error::parse(
            source_name,
            1,
            format!(
                "expected header `frame,count`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    };

    let mut frames: Vec<u64> = Vec::new();
    let mut counts = Vec::new();
    let mut notes = ImportNotes::default();
    let mut stride: Option<u64> = None;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(source_name, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("");
        let frame: u64 = field(frame_col)
            .parse()
            .map_err(|_| Error::parse(source_name, line, format!("bad frame index `{}`", field(frame_col))))?;
        let (count, rounded) = parse_count(field(count_col)).map_err(|m| Error::parse(source_name, line, m))?;
        if rounded {
            notes.rounded_lines.push(line);
        }
        if let Some(&last) = frames.last() {
            if frame <= last {
                return Err(Error::parse(
                    source_name,
                    line,
                    format!("frames must be strictly increasing ({frame} after {last})"),
                ));
            }
            let step = frame - last;
            match stride {
                None => stride = Some(step),
                Some(s) if s != step => {
                    return Err(Error::parse(
                        source_name,
                        line,
                        format!("stride error: step {step} differs from stride {s}"),
                    ))
                }
                Some(_) => {}
            }
        }
        frames.push(frame);
        counts.push(count);
    }
    if !notes.rounded_lines.is_empty() {
        log::warn!(
            "{}: rounded {} fractional counts half-up",
            source_name.display(),
            notes.rounded_lines.len()
        );
    }
    let first_frame = frames.first().copied().unwrap_or(0);
    let series = CountSeries::new(counts, first_frame, stride.unwrap_or(default_stride), frame_rate)?;
    Ok((series, notes))
}

/// Reads a counts CSV with the default stride and frame rate.
pub fn import_counts(path: &Path) -> Result<CountSeries> {
    let defaults = DescriptorParams::default();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_counts(file, path, defaults.skip as u64, defaults.frame_rate).map(|(s, _)| s)
}

pub fn write_counts<W: Write>(mut out: W, series: &CountSeries) -> std::io::Result<()> {
    writeln!(out, "frame,count")?;
    for (frame, count) in series.frames().zip(&series.counts) {
        writeln!(out, "{frame},{count}")?;
    }
    Ok(())
}
