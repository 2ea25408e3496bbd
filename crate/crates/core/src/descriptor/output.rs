//! Descriptor timeline and alarm CSV files.

use std::io::Write;
use std::path::Path;

use super::alarm::AlarmEvent;
use super::histogram::PatternHistogram;
use crate::error::{Error, Result};

/// `window_index,center_frame,quiet_fraction,alarm` with one row per histogram.
pub fn write_descriptor_csv<W: Write>(
    mut out: W,
    histograms: &[PatternHistogram],
    alarms: &[AlarmEvent],
) -> std::io::Result<()> {
    writeln!(out, "window_index,center_frame,quiet_fraction,alarm")?;
    let mut pending = alarms.iter().peekable();
    for h in histograms {
        let alarm = match pending.peek() {
            Some(a) if a.frame == h.center_frame => {
                pending.next();
                1
            }
            _ => 0,
        };
        writeln!(
            out,
            "{},{},{:.6},{}",
            h.window_index,
            h.center_frame,
            h.quiet_fraction(),
            alarm
        )?;
    }
    Ok(())
}

/// `frame,quiet_fraction` with one row per alarm.
pub fn write_alarms_csv<W: Write>(mut out: W, alarms: &[AlarmEvent]) -> std::io::Result<()> {
    writeln!(out, "frame,quiet_fraction")?;
    for a in alarms {
        writeln!(out, "{},{:.6}", a.frame, a.quiet_fraction)?;
    }
    Ok(())
}

/// Reads an alarms CSV. Only the `frame` column is required.
pub fn read_alarms_csv(path: &Path) -> Result<Vec<AlarmEvent>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = rdr.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let frame_col = headers
        .iter()
        .position(|h| h == "frame")
        .ok_or_else(|| Error::parse(path, 1, "missing column `frame`"))?;
    let fraction_col = headers.iter().position(|h| h == "quiet_fraction");
    let mut alarms = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = record.get(frame_col).unwrap_or("");
        let frame = raw
            .parse::<u64>()
            .map_err(|_| Error::parse(path, line, format!("bad alarm frame `{raw}`")))?;
        let quiet_fraction = match fraction_col.and_then(|c| record.get(c)) {
            Some(v) => v
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("bad quiet fraction `{v}`")))?,
            None => f64::NAN,
        };
        alarms.push(AlarmEvent { frame, quiet_fraction });
    }
    alarms.sort_by_key(|a| a.frame);
    Ok(alarms)
}
