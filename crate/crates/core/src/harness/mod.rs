// SPDX-License-Identifier: Apache-2.0

//! Benchmark runs: configuration, case discovery, caching, parallel
//! evaluation, replicates and reports.
//!
//! A run directory looks like:
//!
//! ```text
//! <out>/
//!   status.json               running | complete | incomplete, with the error
//!   results.csv  report.json  results.txt  summary.csv (replicates only)
//!   compute_time.json         per-case, per-stage backend seconds
//!   cache/<backends digest>/<stage>/<key>.json
//!   cases/<NN_XXXX>/replicate_<r>/metrics.json
//!   cases/<NN_XXXX>/replicate_<r>/scaffold_<NNN>/{sequences.fa, prediction_<k>.pdb, rmsd.tsv}
//! ```
//!
//! Every backend answer is cached by content digest before it is used, so a
//! run that stops part-way resumes by rerunning the same command: finished
//! work is served from the cache and the final report is byte-identical to
//! an uninterrupted run. Reports contain no timings or paths of the run
//! itself; timings go to `compute_time.json`.

mod cache;
mod report;
mod timing;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::backends::external::write_fasta;
use crate::backends::{BackendConfig, BackendError, Backends};
use crate::digest::content_digest;
use crate::metrics::{summarize_case, test_scaffold, CaseMetrics, DesignSettings, MetricsError, ScoreParams};
use crate::structure_io::{
    read_motif_spec, read_scaffold_set, write_backbone_pdb, MotifSpec, ScaffoldSet, StructureError,
};

pub use cache::{cache_key, Cache};
pub use report::{
    emit_report, read_results_csv, render_table, scores_by_replicate, write_compute_ledger, write_results_csv,
    write_summary_csv, BenchmarkReport, CaseRow, CaseSummary, MeanStd, ReplicateSummary, ReportError, ReportFormat,
    COMPUTE_TIME_JSON, REPORT_JSON, RESULTS_COLUMNS, RESULTS_CSV, RESULTS_TABLE, SUMMARY_CSV,
};
pub use timing::{ComputeLedger, StageClock, StageTimes};

pub const STATUS_JSON: &str = "status.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{case}: {source}")]
    Input {
        case: String,
        #[source]
        source: StructureError,
    },
    #[error("{case} replicate {replicate}: {source}")]
    Evaluation {
        case: String,
        replicate: usize,
        #[source]
        source: MetricsError,
    },
    #[error("run stopped after {evaluated} scaffold evaluations; rerun to resume")]
    Interrupted { evaluated: usize },
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit status: 2 configuration, 3 backend failure, 4 incomplete.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Input { .. } => 2,
            HarnessError::Evaluation { source, .. } if source.is_backend_failure() => 3,
            HarnessError::Evaluation { .. } | HarnessError::Interrupted { .. } => 4,
            HarnessError::Report(_) | HarnessError::Io { .. } => 4,
        }
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub motif_dir: PathBuf,
    pub scaffolds_dir: PathBuf,
    pub backend_config_path: PathBuf,
    pub output_dir: PathBuf,
    /// Defaults to the available parallelism, capped by the backends' `max_workers`.
    pub worker_count: Option<usize>,
    pub seed: u64,
    /// Case numbers to run; all cases when `None`.
    pub case_filter: Option<BTreeSet<u32>>,
    pub replicate_count: usize,
    pub formats: Vec<ReportFormat>,
    /// Stop with [`HarnessError::Interrupted`] once this many scaffold
    /// evaluations have started, leaving the cache as a checkpoint.
    pub stop_after: Option<usize>,
}

impl RunConfig {
    pub fn new(
        motif_dir: impl Into<PathBuf>,
        scaffolds_dir: impl Into<PathBuf>,
        backend_config_path: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
    ) -> Self {
        RunConfig {
            motif_dir: motif_dir.into(),
            scaffolds_dir: scaffolds_dir.into(),
            backend_config_path: backend_config_path.into(),
            output_dir: output_dir.into(),
            worker_count: None,
            seed: 0,
            case_filter: None,
            replicate_count: 1,
            formats: ReportFormat::ALL.to_vec(),
            stop_after: None,
        }
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.worker_count == Some(0) {
            return Err(HarnessError::Config("worker count must be at least 1".into()));
        }
        if self.replicate_count == 0 {
            return Err(HarnessError::Config("replicate count must be at least 1".into()));
        }
        for (what, path) in [
            ("motif directory", &self.motif_dir),
            ("scaffold directory", &self.scaffolds_dir),
        ] {
            if !path.is_dir() {
                return Err(HarnessError::Config(format!(
                    "{what} {} does not exist",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}

/// One benchmark problem found in the motif directory.
#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub number: u32,
    pub pdb_id: String,
    /// `NN_XXXX`, the file stem shared by the motif file and scaffold directory.
    pub key: String,
    pub spec: MotifSpec,
}

impl BenchmarkCase {
    /// 1, 2, or 3 for three or more segments.
    pub fn group(&self) -> u8 {
        self.spec.segments().len().min(3) as u8
    }
}

fn parse_case_stem(stem: &str) -> Option<(u32, String)> {
    let (number, pdb_id) = stem.split_once('_')?;
    let number = number.parse().ok()?;
    (pdb_id.len() == 4 && pdb_id.chars().all(|c| c.is_ascii_alphanumeric())).then(|| (number, pdb_id.to_string()))
}

/// Motif files named `NN_XXXX.pdb`, sorted by case number.
pub fn load_cases(motif_dir: &Path) -> Result<Vec<BenchmarkCase>, HarnessError> {
    let entries = std::fs::read_dir(motif_dir).map_err(io_error(motif_dir))?;
    let mut cases = Vec::new();
    for entry in entries {
        let path = entry.map_err(io_error(motif_dir))?.path();
        if path.extension().is_none_or(|e| e != "pdb") {
            continue;
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let Some((number, pdb_id)) = parse_case_stem(&stem) else {
            return Err(HarnessError::Config(format!(
                "motif file {} is not named NN_XXXX.pdb",
                path.display()
            )));
        };
        let spec = read_motif_spec(&path).map_err(|source| HarnessError::Input {
            case: stem.clone(),
            source,
        })?;
        if !spec.reference_pdb_id().eq_ignore_ascii_case(&pdb_id) {
            return Err(HarnessError::Config(format!(
                "{} declares reference PDB {} but is named for {pdb_id}",
                path.display(),
                spec.reference_pdb_id()
            )));
        }
        cases.push(BenchmarkCase {
            number,
            pdb_id,
            key: stem,
            spec,
        });
    }
    cases.sort_by_key(|c| c.number);
    if let Some(pair) = cases.windows(2).find(|w| w[0].number == w[1].number) {
        return Err(HarnessError::Config(format!(
            "case number {} appears twice",
            pair[0].number
        )));
    }
    Ok(cases)
}

fn select_cases(cases: Vec<BenchmarkCase>, filter: &Option<BTreeSet<u32>>) -> Result<Vec<BenchmarkCase>, HarnessError> {
    let Some(filter) = filter else {
        return Ok(cases);
    };
    let known: BTreeSet<u32> = cases.iter().map(|c| c.number).collect();
    if let Some(missing) = filter.difference(&known).next() {
        return Err(HarnessError::Config(format!("no motif file for case {missing}")));
    }
    Ok(cases.into_iter().filter(|c| filter.contains(&c.number)).collect())
}

#[derive(Debug, Serialize)]
struct RunStatus<'a> {
    state: &'a str,
    completed: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn write_status(dir: &Path, status: &RunStatus<'_>) -> Result<(), HarnessError> {
    let path = dir.join(STATUS_JSON);
    let json = serde_json::to_string_pretty(status).expect("status serializes") + "\n";
    std::fs::write(&path, json).map_err(io_error(&path))
}

fn format_rmsd_table(outcome: &crate::metrics::ScaffoldOutcome) -> String {
    let mut out = String::from("sequence\tmotif_rmsd\tsc_rmsd\tpassed\n");
    for (k, s) in outcome.sequences.iter().enumerate() {
        let _ = writeln!(out, "{k}\t{:.4}\t{:.4}\t{}", s.motif_rmsd, s.sc_rmsd, s.passed);
    }
    out
}

struct Job<'a> {
    case: &'a BenchmarkCase,
    set: &'a ScaffoldSet,
    replicate: usize,
}

struct JobResult {
    row: CaseRow,
    times: StageTimes,
}

struct Runner<'a> {
    config: &'a RunConfig,
    backends: Backends,
    started: AtomicUsize,
}

impl Runner<'_> {
    fn run_job(&self, job: &Job<'_>) -> Result<JobResult, HarnessError> {
        let clock = Arc::new(StageClock::default());
        let backends = clock.wrap(&self.backends);
        let settings = DesignSettings {
            seed: Some(self.config.seed.wrapping_add(job.replicate as u64)),
            ..DesignSettings::default()
        };
        let case_dir = self
            .config
            .output_dir
            .join("cases")
            .join(&job.case.key)
            .join(format!("replicate_{}", job.replicate));
        let evaluation = |source| HarnessError::Evaluation {
            case: job.case.key.clone(),
            replicate: job.replicate,
            source,
        };
        let start = Instant::now();

        let outcomes = job
            .set
            .scaffolds()
            .par_iter()
            .map(|scaffold| {
                let started = self.started.fetch_add(1, Ordering::SeqCst);
                if self.config.stop_after.is_some_and(|limit| started >= limit) {
                    return Err(HarnessError::Interrupted { evaluated: started });
                }
                let trial = test_scaffold(scaffold, &job.case.spec, &backends, &settings).map_err(evaluation)?;
                let dir = case_dir.join(format!("scaffold_{:03}", scaffold.index()));
                std::fs::create_dir_all(&dir).map_err(io_error(&dir))?;
                let records: Vec<(String, &str)> = trial
                    .outcome
                    .sequences
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (format!("design_{k}"), s.sequence.as_str()))
                    .collect();
                let fasta = write_fasta(records.iter().map(|(h, s)| (h.as_str(), *s)));
                let mut files = vec![
                    ("sequences.fa".to_string(), fasta),
                    ("rmsd.tsv".to_string(), format_rmsd_table(&trial.outcome)),
                ];
                for (k, prediction) in trial.predictions.iter().enumerate() {
                    files.push((format!("prediction_{k}.pdb"), write_backbone_pdb(&prediction.residues)));
                }
                for (name, contents) in files {
                    let path = dir.join(name);
                    std::fs::write(&path, contents).map_err(io_error(&path))?;
                }
                Ok(trial.outcome)
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;

        let metrics = summarize_case(job.set.scaffolds(), &outcomes, &backends).map_err(evaluation)?;
        let metrics_path = case_dir.join("metrics.json");
        let json = serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n";
        std::fs::write(&metrics_path, json).map_err(io_error(&metrics_path))?;

        Ok(JobResult {
            row: case_row(job.case, job.replicate, &metrics),
            times: clock.snapshot(start.elapsed().as_secs_f64()),
        })
    }
}

fn case_row(case: &BenchmarkCase, replicate: usize, metrics: &CaseMetrics) -> CaseRow {
    CaseRow {
        case: case.number,
        pdb_id: case.pdb_id.clone(),
        group: case.group(),
        replicate,
        num_solutions: metrics.num_solutions,
        novelty: metrics.novelty,
        success_rate_pct: metrics.success_rate_pct(),
    }
}

/// Worker count after applying the default and the backends' cap.
pub fn effective_workers(requested: Option<usize>, backends: &BackendConfig) -> usize {
    let default = std::thread::available_parallelism().map_or(1, |n| n.get());
    let wanted = requested.unwrap_or(default);
    backends.worker_cap().map_or(wanted, |cap| wanted.min(cap)).max(1)
}

/// Run every selected case and replicate, then write the report.
pub fn run_benchmark(config: &RunConfig) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    if !config.backend_config_path.is_file() {
        return Err(HarnessError::Config(format!(
            "backend config {} does not exist",
            config.backend_config_path.display()
        )));
    }
    let backend_config =
        BackendConfig::load(&config.backend_config_path).map_err(|e| HarnessError::Config(e.to_string()))?;
    let backends = Backends::from_config(&backend_config).map_err(|e| match e {
        BackendError::Configuration(m) => HarnessError::Config(m),
        other => HarnessError::Config(other.to_string()),
    })?;
    run_with_backends(config, &backend_config, backends)
}

/// [`run_benchmark`] with already-constructed backends; `backend_config`
/// names the cache namespace and is recorded in the report.
pub fn run_with_backends(
    config: &RunConfig,
    backend_config: &BackendConfig,
    backends: Backends,
) -> Result<BenchmarkReport, HarnessError> {
    config.validate()?;
    let cases = select_cases(load_cases(&config.motif_dir)?, &config.case_filter)?;
    if cases.is_empty() {
        return Err(HarnessError::Config(format!(
            "no motif files in {}",
            config.motif_dir.display()
        )));
    }
    let mut sets = Vec::with_capacity(cases.len());
    for case in &cases {
        let dir = config.scaffolds_dir.join(&case.key);
        if !dir.is_dir() {
            return Err(HarnessError::Config(format!(
                "no scaffold set for case {} (expected {})",
                case.key,
                dir.display()
            )));
        }
        let set = read_scaffold_set(&dir, &case.spec).map_err(|source| HarnessError::Input {
            case: case.key.clone(),
            source,
        })?;
        sets.push(set);
    }

    std::fs::create_dir_all(&config.output_dir).map_err(io_error(&config.output_dir))?;
    write_status(
        &config.output_dir,
        &RunStatus {
            state: "running",
            completed: Vec::new(),
            error: None,
        },
    )?;

    let cache = Arc::new(Cache::new(
        config
            .output_dir
            .join("cache")
            .join(&content_digest("backends", backend_config)[..16]),
    ));
    let runner = Runner {
        config,
        backends: cache.wrap(&backends),
        started: AtomicUsize::new(0),
    };
    let jobs: Vec<Job<'_>> = (0..config.replicate_count)
        .flat_map(|replicate| {
            cases
                .iter()
                .zip(&sets)
                .map(move |(case, set)| Job { case, set, replicate })
        })
        .collect();

    let workers = effective_workers(config.worker_count, backend_config);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("cannot start {workers} workers: {e}")))?;
    let results: Vec<Result<JobResult, HarnessError>> =
        pool.install(|| jobs.par_iter().map(|job| runner.run_job(job)).collect());

    let completed: Vec<String> = jobs
        .iter()
        .zip(&results)
        .filter(|(_, r)| r.is_ok())
        .map(|(job, _)| format!("{}/replicate_{}", job.case.key, job.replicate))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut ledger = ComputeLedger::default();
    let mut first_error = None;
    for (job, result) in jobs.iter().zip(results) {
        match result {
            Ok(done) => {
                ledger.add(&job.case.key, done.times);
                rows.push(done.row);
            }
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(error) = first_error {
        write_status(
            &config.output_dir,
            &RunStatus {
                state: "incomplete",
                completed,
                error: Some(error.to_string()),
            },
        )?;
        return Err(error);
    }

    let mut report = BenchmarkReport::from_rows(rows, config.replicate_count, config.seed, ScoreParams::default())
        .map_err(|source| HarnessError::Evaluation {
            case: "all".into(),
            replicate: 0,
            source,
        })?;
    report.backends = Some(backend_config.clone());
    report.compute_time = ledger;
    emit_report(&report, &config.output_dir, &config.formats)?;
    write_compute_ledger(&report.compute_time, &config.output_dir)?;
    write_status(
        &config.output_dir,
        &RunStatus {
            state: "complete",
            completed,
            error: None,
        },
    )?;
    Ok(report)
}
