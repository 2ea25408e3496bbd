use std::io::Write;
use std::path::{Path, PathBuf};

use super::grid::Combo;
use super::matching::MatchCounts;
use super::metrics::EvalReport;
use super::LabelEvent;
use crate::error::{Error, Result};

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn column(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::parse(path, 1, format!("missing column `{name}`")))
}

/// Reads a labels CSV (`frame` column), returned sorted by frame.
pub fn read_labels(path: &Path) -> Result<Vec<LabelEvent>> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let col = column(&headers, "frame", path)?;
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let raw = record.get(col).unwrap_or("");
        let frame = raw
            .parse::<u64>()
            .map_err(|_| Error::parse(path, line, format!("bad label frame `{raw}`")))?;
        labels.push(LabelEvent { frame });
    }
    labels.sort_unstable();
    Ok(labels)
}

pub fn write_labels<W: Write>(mut out: W, labels: &[LabelEvent]) -> std::io::Result<()> {
    writeln!(out, "frame")?;
    for l in labels {
        writeln!(out, "{}", l.frame)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub video_id: String,
    pub counts_path: PathBuf,
    pub labels_path: PathBuf,
}

/// Reads a `video_id,counts_path,labels_path` manifest. Relative paths are
/// resolved against the manifest's directory. Every missing file is listed in
/// one error.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, 1, e.to_string()))?.clone();
    let (id_col, counts_col, labels_col) = (
        column(&headers, "video_id", path)?,
        column(&headers, "counts_path", path)?,
        column(&headers, "labels_path", path)?,
    );
    let mut entries = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| Error::parse(path, e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let get = |i: usize| record.get(i).unwrap_or("").to_string();
        entries.push(ManifestEntry {
            video_id: get(id_col),
            counts_path: base.join(get(counts_col)),
            labels_path: base.join(get(labels_col)),
        });
    }
    let missing: Vec<String> = entries
        .iter()
        .flat_map(|e| [&e.counts_path, &e.labels_path])
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::parse(path, 0, format!("missing files: {}", missing.join(", "))));
    }
    Ok(entries)
}

/// One line of a report CSV.
#[derive(Debug, Clone)]
pub struct ReportRow {
    pub video: String,
    /// `None` when the row pools folds tuned to different triples.
    pub combo: Option<Combo>,
    pub report: EvalReport,
}

const REPORT_HEADER: &str = "video,T,L,t_star,tp,fp,fn,precision,recall,f1";

fn metrics_fields(r: &EvalReport) -> String {
    format!(
        "{},{},{},{:.6},{:.6},{:.6}",
        r.tp, r.fp, r.fn_, r.precision, r.recall, r.f1
    )
}

pub fn write_report<W: Write>(mut out: W, rows: &[ReportRow]) -> std::io::Result<()> {
    writeln!(out, "{REPORT_HEADER}")?;
    for row in rows {
        let combo = match &row.combo {
            Some(c) => format!("{},{},{:.2}", c.count_threshold, c.outer_window, c.bin_threshold),
            None => ",,".to_string(),
        };
        writeln!(out, "{},{combo},{}", row.video, metrics_fields(&row.report))?;
    }
    Ok(())
}

/// Every grid triple with its pooled counts and scores.
pub fn write_sweep<W: Write>(mut out: W, sweep: &[(Combo, MatchCounts)]) -> std::io::Result<()> {
    writeln!(out, "T,L,t_star,tp,fp,fn,precision,recall,f1")?;
    for (combo, counts) in sweep {
        writeln!(
            out,
            "{},{},{:.2},{}",
            combo.count_threshold,
            combo.outer_window,
            combo.bin_threshold,
            metrics_fields(&EvalReport::from(*counts))
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn labels_sorted_and_validated() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("labels.csv");
        fs::write(&p, "frame\n900\n300\n").unwrap();
        assert_eq!(
            read_labels(&p).unwrap(),
            vec![LabelEvent { frame: 300 }, LabelEvent { frame: 900 }]
        );
        fs::write(&p, "frame\n-4\n").unwrap();
        assert!(read_labels(&p).unwrap_err().to_string().contains("line 2"));
        fs::write(&p, "onset\n4\n").unwrap();
        assert!(read_labels(&p).unwrap_err().to_string().contains("missing column"));
        fs::write(&p, "frame\n").unwrap();
        assert!(read_labels(&p).unwrap().is_empty());
    }

    #[test]
    fn manifest_lists_all_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "frame,count\n").unwrap();
        fs::write(dir.path().join("a_labels.csv"), "frame\n").unwrap();
        let m = dir.path().join("manifest.csv");
        fs::write(
            &m,
            "video_id,counts_path,labels_path\nA,a.csv,a_labels.csv\nB,b.csv,b_labels.csv\n",
        )
        .unwrap();
        let err = read_manifest(&m).unwrap_err().to_string();
        assert!(err.contains("b.csv") && err.contains("b_labels.csv"), "{err}");
        fs::write(&m, "video_id,counts_path,labels_path\nA,a.csv,a_labels.csv\n").unwrap();
        let entries = read_manifest(&m).unwrap();
        assert_eq!(entries[0].counts_path, dir.path().join("a.csv"));
    }

    #[test]
    fn report_format() {
        let rows = [ReportRow {
            video: "v1".into(),
            combo: Some(Combo {
                count_threshold: 3,
                outer_window: 15,
                bin_threshold: 0.85,
            }),
            report: MatchCounts { tp: 2, fp: 1, fn_: 1 }.into(),
        }];
        let mut buf = Vec::new();
        write_report(&mut buf, &rows).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "video,T,L,t_star,tp,fp,fn,precision,recall,f1\nv1,3,15,0.85,2,1,1,0.666667,0.666667,0.666667\n"
        );
    }
}
