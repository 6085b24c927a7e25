// SPDX-License-Identifier: Apache-2.0

//! Benchmark reports and their on-disk forms.
//!
//! `results.csv` has one row per case and replicate with the fixed column
//! order `case,pdb_id,group,replicate,num_solutions,novelty,success_rate_pct`.
//! Floats are written in shortest round-trip form, so the file re-parses to
//! exactly the values in the report.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::timing::ComputeLedger;
use crate::backends::BackendConfig;
use crate::metrics::{motifbench_score, MetricsError, ScoreParams};

pub const RESULTS_CSV: &str = "results.csv";
pub const REPORT_JSON: &str = "report.json";
pub const RESULTS_TABLE: &str = "results.txt";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const COMPUTE_TIME_JSON: &str = "compute_time.json";

pub const RESULTS_COLUMNS: [&str; 7] = [
    "case",
    "pdb_id",
    "group",
    "replicate",
    "num_solutions",
    "novelty",
    "success_rate_pct",
];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("results CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("results CSV header is {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error(transparent)]
    Score(#[from] MetricsError),
    #[error("unknown report format `{0}` (expected csv, json or table)")]
    UnknownFormat(String),
}

/// One case in one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub case: u32,
    pub pdb_id: String,
    pub group: u8,
    /// 0-based.
    pub replicate: usize,
    pub num_solutions: usize,
    pub novelty: f64,
    pub success_rate_pct: f64,
}

/// Sample mean and sample standard deviation (n − 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Standard deviation is 0 for fewer than two values.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return MeanStd { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        MeanStd { mean, std }
    }
}

/// `mean ± std`, two decimals unless a precision is given.
impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(2);
        write!(f, "{:.p$} ± {:.p$}", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case: u32,
    pub pdb_id: String,
    pub group: u8,
    pub num_solutions: MeanStd,
    pub novelty: MeanStd,
    pub success_rate_pct: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSummary {
    pub cases: Vec<CaseSummary>,
    pub score: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub replicate_count: usize,
    pub score_params: ScoreParams,
    /// Ordered by replicate, then case number.
    pub rows: Vec<CaseRow>,
    pub replicate_scores: Vec<f64>,
    /// Mean of `replicate_scores`.
    pub score: f64,
    /// Present exactly when `replicate_count > 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<ReplicateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backends: Option<BackendConfig>,
    /// Written separately so timings never perturb the report bytes.
    #[serde(skip)]
    pub compute_time: ComputeLedger,
}

/// Score of each replicate, in replicate order.
pub fn scores_by_replicate(rows: &[CaseRow], params: &ScoreParams) -> Result<Vec<f64>, MetricsError> {
    let mut by_replicate: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for row in rows {
        by_replicate.entry(row.replicate).or_default().push(row.num_solutions);
    }
    if by_replicate.is_empty() {
        return Err(MetricsError::EmptyScore);
    }
    by_replicate.values().map(|u| motifbench_score(u, params)).collect()
}

impl BenchmarkReport {
    pub fn from_rows(
        mut rows: Vec<CaseRow>,
        replicate_count: usize,
        seed: u64,
        score_params: ScoreParams,
    ) -> Result<Self, MetricsError> {
        rows.sort_by_key(|r| (r.replicate, r.case));
        let replicate_scores = scores_by_replicate(&rows, &score_params)?;
        let score = MeanStd::of(&replicate_scores).mean;
        let summary = (replicate_count > 1).then(|| summarize(&rows, &replicate_scores));
        Ok(BenchmarkReport {
            seed,
            replicate_count,
            score_params,
            rows,
            replicate_scores,
            score,
            summary,
            backends: None,
            compute_time: ComputeLedger::default(),
        })
    }
}

fn summarize(rows: &[CaseRow], replicate_scores: &[f64]) -> ReplicateSummary {
    let mut by_case: BTreeMap<u32, Vec<&CaseRow>> = BTreeMap::new();
    for row in rows {
        by_case.entry(row.case).or_default().push(row);
    }
    let cases = by_case
        .into_values()
        .map(|rs| {
            let stat = |f: fn(&CaseRow) -> f64| MeanStd::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            CaseSummary {
                case: rs[0].case,
                pdb_id: rs[0].pdb_id.clone(),
                group: rs[0].group,
                num_solutions: stat(|r| r.num_solutions as f64),
                novelty: stat(|r| r.novelty),
                success_rate_pct: stat(|r| r.success_rate_pct),
            }
        })
        .collect();
    ReplicateSummary {
        cases,
        score: MeanStd::of(replicate_scores),
    }
}

pub fn write_results_csv(rows: &[CaseRow]) -> Result<String, ReportError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row)?;
    }
    if rows.is_empty() {
        writer.write_record(RESULTS_COLUMNS)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| ReportError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

pub fn read_results_csv(text: &str) -> Result<Vec<CaseRow>, ReportError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != RESULTS_COLUMNS {
        return Err(ReportError::Header {
            found: header,
            expected: RESULTS_COLUMNS.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(reader.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_summary_csv(summary: &ReplicateSummary) -> String {
    let mut out = String::from(
        "case,pdb_id,group,num_solutions_mean,num_solutions_std,novelty_mean,novelty_std,success_rate_pct_mean,success_rate_pct_std\n",
    );
    for c in &summary.cases {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.case,
            c.pdb_id,
            c.group,
            c.num_solutions.mean,
            c.num_solutions.std,
            c.novelty.mean,
            c.novelty.std,
            c.success_rate_pct.mean,
            c.success_rate_pct.std
        );
    }
    let _ = writeln!(out, "score,,,{},{},,,,", summary.score.mean, summary.score.std);
    out
}

/// Aligned text table in the layout of the published results.
pub fn render_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    let header = ["Case", "PDB ID", "Group", "# Solutions", "Novelty", "Success Rate (%)"];
    let mut lines: Vec<[String; 6]> = Vec::new();
    match &report.summary {
        None => {
            for r in &report.rows {
                lines.push([
                    format!("{:02}", r.case),
                    r.pdb_id.clone(),
                    r.group.to_string(),
                    r.num_solutions.to_string(),
                    format!("{:.2}", r.novelty),
                    format!("{:.0}", r.success_rate_pct),
                ]);
            }
        }
        Some(summary) => {
            for c in &summary.cases {
                lines.push([
                    format!("{:02}", c.case),
                    c.pdb_id.clone(),
                    c.group.to_string(),
                    c.num_solutions.to_string(),
                    c.novelty.to_string(),
                    c.success_rate_pct.to_string(),
                ]);
            }
        }
    }
    let mut widths = header.map(|h| h.chars().count());
    for line in &lines {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let pad = |cells: &[String], out: &mut String| {
        let row: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (cell, w))| {
                let fill = w - cell.chars().count();
                if i == 1 {
                    format!("{cell}{}", " ".repeat(fill))
                } else {
                    format!("{}{cell}", " ".repeat(fill))
                }
            })
            .collect();
        let _ = writeln!(out, "{}", row.join("  ").trim_end());
    };
    pad(&header.map(String::from), &mut out);
    for line in &lines {
        pad(line, &mut out);
    }
    match &report.summary {
        None => {
            let _ = writeln!(out, "\nMotifBench score: {:.2}", report.score);
        }
        Some(summary) => {
            let _ = writeln!(
                out,
                "\nMotifBench score: {} ({} replicates)",
                summary.score, report.replicate_count
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ReportFormat {
    Csv,
    Json,
    Table,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 3] = [ReportFormat::Csv, ReportFormat::Json, ReportFormat::Table];
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "table" | "txt" => Ok(ReportFormat::Table),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf, ReportError> {
    std::fs::write(&path, contents).map_err(|source| ReportError::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Write the requested formats into `dir` and return the files written.
/// CSV output also writes `summary.csv` when replicates were aggregated.
pub fn emit_report(
    report: &BenchmarkReport,
    dir: &Path,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::new();
    for format in formats {
        match format {
            ReportFormat::Csv => {
                written.push(write_file(dir.join(RESULTS_CSV), &write_results_csv(&report.rows)?)?);
                if let Some(summary) = &report.summary {
                    written.push(write_file(dir.join(SUMMARY_CSV), &write_summary_csv(summary))?);
                }
            }
            ReportFormat::Json => {
                let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
                written.push(write_file(dir.join(REPORT_JSON), &json)?);
            }
            ReportFormat::Table => {
                written.push(write_file(dir.join(RESULTS_TABLE), &render_table(report))?);
            }
        }
    }
    Ok(written)
}

pub fn write_compute_ledger(ledger: &ComputeLedger, dir: &Path) -> Result<PathBuf, ReportError> {
    let json = serde_json::to_string_pretty(ledger).expect("ledger serializes") + "\n";
    write_file(dir.join(COMPUTE_TIME_JSON), &json)
}
