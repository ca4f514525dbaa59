use std::io::Write;
use std::path::Path;

use speckle_core::learn::{EpochRecord, EvalReport, CLASSES};

use crate::error::{CliError, CliResult};

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

fn writer(path: &Path) -> CliResult<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(csv_err(path))
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["epoch", "train_loss", "train_acc", "val_acc"]).map_err(csv_err(path))?;
    for h in history {
        w.write_record([
            h.epoch.to_string(),
            h.train_loss.to_string(),
            h.train_acc.to_string(),
            h.val_acc.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Three blocks separated by blank lines: overall metrics, per-sweep-point
/// accuracy, and the confusion matrix (rows true, columns predicted).
pub fn write_report_csv(path: &Path, report: &EvalReport, sweep_values: &[f64]) -> CliResult<()> {
    let rows: Vec<Vec<String>> = {
        let mut rows = vec![
            vec!["metric".into(), "value".into()],
            vec!["accuracy".into(), report.accuracy.to_string()],
            vec!["correct".into(), report.correct().to_string()],
            vec!["total".into(), report.total.to_string()],
            vec![],
            vec![
                "sweep_index".into(),
                "sweep_value".into(),
                "correct".into(),
                "total".into(),
                "accuracy".into(),
            ],
        ];
        for g in &report.per_group {
            let value = sweep_values.get(g.group as usize).map_or(String::new(), |v| v.to_string());
            rows.push(vec![
                g.group.to_string(),
                value,
                g.correct.to_string(),
                g.total.to_string(),
                g.accuracy.to_string(),
            ]);
        }
        rows.push(vec![]);
        let mut head = vec!["true\\predicted".to_string()];
        head.extend((0..CLASSES).map(|c| c.to_string()));
        rows.push(head);
        for (c, row) in report.confusion.iter().enumerate() {
            let mut r = vec![c.to_string()];
            r.extend(row.iter().map(|v| v.to_string()));
            rows.push(r);
        }
        rows
    };
    let mut out = Vec::new();
    for block in rows.split(|r| r.is_empty()) {
        if !out.is_empty() {
            out.push(b'\n');
        }
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
        for r in block {
            w.write_record(r).map_err(csv_err(path))?;
        }
        out.extend(w.into_inner().map_err(|e| CliError::io(path)(e.into_error()))?);
    }
    std::fs::write(path, out).map_err(CliError::io(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sweep_value: f64,
    pub accuracy: f64,
    pub mode: String,
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = writer(path)?;
    w.write_record(["sweep_value", "accuracy", "mode"]).map_err(csv_err(path))?;
    for r in rows {
        w.write_record([r.sweep_value.to_string(), r.accuracy.to_string(), r.mode.clone()])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(CliError::io(path))
}

/// Min-max scaled 8-bit levels; a constant image maps to mid-gray.
pub fn to_gray8(values: &[f32]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(hi > lo) {
        return vec![128; values.len()];
    }
    let span = (hi - lo) as f64;
    values
        .iter()
        .map(|&v| (255.0 * (v - lo) as f64 / span).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Binary PGM (P5, maxval 255).
pub fn write_pgm(path: &Path, width: usize, height: usize, gray: &[u8]) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(CliError::io(path))?);
    write!(f, "P5\n{width} {height}\n255\n").map_err(CliError::io(path))?;
    f.write_all(gray).map_err(CliError::io(path))?;
    f.flush().map_err(CliError::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_scaling() {
        assert_eq!(to_gray8(&[2.0, 2.0, 2.0]), vec![128, 128, 128]);
        assert_eq!(to_gray8(&[-1.0, 0.0, 1.0]), vec![0, 128, 255]);
    }

    #[test]
    fn pgm_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        write_pgm(&p, 2, 1, &[0, 255]).unwrap();
        let b = std::fs::read(&p).unwrap();
        assert_eq!(&b[..2], b"P5");
        assert_eq!(&b[b.len() - 2..], &[0, 255]);
    }
}
