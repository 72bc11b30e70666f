//! `records.csv`, `failures.csv` and `summary.md`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

use featsel_core::eval::{aggregate_rank, EvaluationRecord, Metric, Shots};

use crate::error::{Error, Result};

pub const RECORDS_HEADER: &str = "dataset,method,shots,seed,metric,value";
pub const FAILURES_HEADER: &str = "dataset,method,shots,seed,error";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellFailure {
    pub dataset: String,
    pub method: String,
    pub shots: Shots,
    pub seed: u64,
    pub error: String,
}

pub fn record_line(r: &EvaluationRecord) -> String {
    format!("{},{},{},{},{},{}", csv_field(&r.dataset), csv_field(&r.method), r.shots, r.seed, r.metric, r.value)
}

pub fn failure_line(f: &CellFailure) -> String {
    format!("{},{},{},{},{}", csv_field(&f.dataset), csv_field(&f.method), f.shots, f.seed, csv_field(&f.error))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_rows(path: &Path, header: &str) -> Result<Vec<csv::StringRecord>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).map_err(|e| Error::format(path, e))?;
    let got: Vec<String> = rdr.headers().map_err(|e| Error::format(path, e))?.iter().map(str::to_string).collect();
    if got.join(",") != header {
        return Err(Error::format(path, format!("unexpected header `{}`", got.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        match rec {
            Ok(r) => out.push(r),
            // a torn final line from an interrupted run; the cell reruns
            Err(e) if e.position().is_some() => continue,
            Err(e) => return Err(Error::format(path, e)),
        }
    }
    Ok(out)
}

pub fn read_records(path: &Path) -> Result<Vec<EvaluationRecord>> {
    let mut out = Vec::new();
    for r in csv_rows(path, RECORDS_HEADER)? {
        if r.len() != 6 {
            continue;
        }
        let parsed = (|| {
            Some(EvaluationRecord {
                dataset: r[0].to_string(),
                method: r[1].to_string(),
                shots: r[2].parse().ok()?,
                seed: r[3].parse().ok()?,
                metric: r[4].parse().ok()?,
                value: r[5].parse().ok()?,
            })
        })();
        if let Some(rec) = parsed {
            out.push(rec);
        }
    }
    Ok(out)
}

pub fn read_failures(path: &Path) -> Result<Vec<CellFailure>> {
    let mut out = Vec::new();
    for r in csv_rows(path, FAILURES_HEADER)? {
        if r.len() != 5 {
            continue;
        }
        if let (Ok(shots), Ok(seed)) = (r[2].parse(), r[3].parse()) {
            out.push(CellFailure {
                dataset: r[0].to_string(),
                method: r[1].to_string(),
                shots,
                seed,
                error: r[4].to_string(),
            });
        }
    }
    Ok(out)
}

/// Append-only line writer that adds the header to a new or empty file.
pub struct CsvAppender {
    file: File,
    path: std::path::PathBuf,
}

impl CsvAppender {
    pub fn open(path: &Path, header: &str) -> Result<Self> {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = OpenOptions::new().create(true).append(true).open(path).map_err(|e| Error::io(path, e))?;
        if fresh {
            writeln!(file, "{header}").map_err(|e| Error::io(path, e))?;
        } else {
            ensure_trailing_newline(path, &mut file)?;
        }
        Ok(CsvAppender { file, path: path.to_path_buf() })
    }

    pub fn append(&mut self, line: &str) -> Result<()> {
        writeln!(self.file, "{line}").and_then(|_| self.file.flush()).map_err(|e| Error::io(&self.path, e))
    }
}

fn ensure_trailing_newline(path: &Path, file: &mut File) -> Result<()> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.last().is_some_and(|&b| b != b'\n') {
        writeln!(file).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn render_lines(header: &str, lines: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Keeps only blocks (dataset, shots, seed) in which every method scored.
fn complete_blocks(records: &[&EvaluationRecord], methods: &[&str]) -> Vec<EvaluationRecord> {
    let mut by_block: BTreeMap<(&str, Shots, u64), Vec<&EvaluationRecord>> = BTreeMap::new();
    for r in records {
        by_block.entry((r.dataset.as_str(), r.shots, r.seed)).or_default().push(r);
    }
    let mut out = Vec::new();
    for block in by_block.values() {
        if methods.iter().all(|m| block.iter().any(|r| r.method == *m)) {
            out.extend(block.iter().map(|r| (*r).clone()));
        }
    }
    out
}

/// Per method and shot level: mean metric over datasets and seeds, then
/// mean ± std across shot levels; plus mean-rank tables per metric.
pub fn render_summary(records: &[EvaluationRecord], methods: &[String], shots: &[Shots]) -> String {
    let mut out = String::from("# Feature selection summary\n");
    let method_refs: Vec<&str> = methods.iter().map(String::as_str).collect();
    for metric in [Metric::Auroc, Metric::Mae] {
        let recs: Vec<&EvaluationRecord> = records.iter().filter(|r| r.metric == metric).collect();
        if recs.is_empty() {
            continue;
        }
        let (name, dir) = match metric {
            Metric::Auroc => ("AUROC", "higher is better"),
            Metric::Mae => ("MAE", "lower is better"),
        };
        let mut datasets: Vec<&str> = recs.iter().map(|r| r.dataset.as_str()).collect();
        datasets.sort_unstable();
        datasets.dedup();
        let _ = writeln!(out, "\n## Mean {name} ({dir})\n\nDatasets: {}\n", datasets.join(", "));
        let _ = write!(out, "| method |");
        for s in shots {
            let _ = write!(out, " {s} |");
        }
        let _ = writeln!(out, " mean ± std |");
        let _ = writeln!(out, "|---|{}---|", "---|".repeat(shots.len()));
        for m in methods {
            let _ = write!(out, "| {m} |");
            let mut per_shot = Vec::new();
            for s in shots {
                let v: Vec<f64> = recs.iter().filter(|r| &r.method == m && r.shots == *s).map(|r| r.value).collect();
                if v.is_empty() {
                    let _ = write!(out, " - |");
                } else {
                    let mv = mean(&v);
                    per_shot.push(mv);
                    let _ = write!(out, " {mv:.3} |");
                }
            }
            if per_shot.is_empty() {
                let _ = writeln!(out, " - |");
            } else {
                let _ = writeln!(out, " {:.3} ± {:.3} |", mean(&per_shot), std_dev(&per_shot));
            }
        }

        let _ = writeln!(out, "\n## {name} mean rank (1 = best)\n");
        let _ = write!(out, "| method |");
        for s in shots {
            let _ = write!(out, " {s} |");
        }
        let _ = writeln!(out, " all |");
        let _ = writeln!(out, "|---|{}---|", "---|".repeat(shots.len()));
        let present: Vec<&str> = method_refs.iter().copied().filter(|m| recs.iter().any(|r| r.method == *m)).collect();
        let mut columns: Vec<BTreeMap<String, f64>> = Vec::new();
        for s in shots.iter().map(Some).chain([None]) {
            let subset: Vec<&EvaluationRecord> = recs.iter().copied().filter(|r| s.is_none_or(|s| r.shots == *s)).collect();
            let complete = complete_blocks(&subset, &present);
            let ranks = if complete.is_empty() { Vec::new() } else { aggregate_rank(&complete).unwrap_or_default() };
            columns.push(ranks.into_iter().collect());
        }
        for m in &present {
            let _ = write!(out, "| {m} |");
            for col in &columns {
                match col.get(*m) {
                    Some(r) => {
                        let _ = write!(out, " {r:.2} |");
                    }
                    None => {
                        let _ = write!(out, " - |");
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}
