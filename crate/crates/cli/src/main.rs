// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use motifbench::harness::{
    load_cases, read_results_csv, render_table, run_benchmark, BenchmarkReport, HarnessError, ReportFormat, RunConfig,
};
use motifbench::metrics::ScoreParams;
use motifbench::structure_io::read_scaffold_set;

const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "motifbench", version, about = "Evaluate motif-scaffolding designs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the benchmark over every case (or a subset) and write reports.
    Evaluate {
        #[arg(long)]
        motifs: PathBuf,
        #[arg(long)]
        scaffolds: PathBuf,
        /// Backend configuration (TOML).
        #[arg(long)]
        backends: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated case numbers.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<u32>>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        /// Comma-separated subset of csv, json, table.
        #[arg(long, value_delimiter = ',', default_value = "csv,json,table")]
        format: Vec<ReportFormat>,
    },
    /// Recompute the score from a results CSV.
    Score { results: PathBuf },
    /// Check scaffold sets against their motif files without running any backend.
    Validate {
        /// One case directory (`NN_XXXX`) or a directory holding several.
        scaffolds: PathBuf,
        #[arg(long)]
        motifs: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Evaluate {
            motifs,
            scaffolds,
            backends,
            out,
            cases,
            workers,
            seed,
            replicates,
            format,
        } => {
            let mut config = RunConfig::new(motifs, scaffolds, backends, out);
            config.case_filter = cases.map(BTreeSet::from_iter);
            config.worker_count = workers;
            config.seed = seed;
            config.replicate_count = replicates;
            config.formats = format;
            evaluate(&config)
        }
        Command::Score { results } => score(&results),
        Command::Validate { scaffolds, motifs } => validate(&scaffolds, &motifs),
    };
    ExitCode::from(code)
}

fn evaluate(config: &RunConfig) -> u8 {
    match run_benchmark(config) {
        Ok(report) => {
            print!("{}", render_table(&report));
            eprintln!("reports written to {}", config.output_dir.display());
            0
        }
        Err(err) => fail(&err),
    }
}

fn fail(err: &HarnessError) -> u8 {
    eprintln!("error: {err}");
    err.exit_code() as u8
}

fn score(path: &Path) -> u8 {
    let report = std::fs::read_to_string(path)
        .map_err(|e| format!("{}: {e}", path.display()))
        .and_then(|text| read_results_csv(&text).map_err(|e| format!("{}: {e}", path.display())))
        .and_then(|rows| {
            let replicates = rows.iter().map(|r| r.replicate).collect::<BTreeSet<_>>().len();
            BenchmarkReport::from_rows(rows, replicates, 0, ScoreParams::default()).map_err(|e| e.to_string())
        });
    match report {
        Ok(report) => {
            match &report.summary {
                Some(summary) => println!("{}", summary.score),
                None => println!("{:.2}", report.score),
            }
            0
        }
        Err(message) => {
            eprintln!("error: {message}");
            EXIT_CONFIG
        }
    }
}

fn validate(scaffolds: &Path, motifs: &Path) -> u8 {
    let cases = match load_cases(motifs) {
        Ok(cases) => cases,
        Err(err) => return fail(&err),
    };
    let name = scaffolds.file_name().map(|n| n.to_string_lossy().into_owned());
    let targets: Vec<_> = match cases.iter().find(|c| Some(&c.key) == name.as_ref()) {
        Some(case) => vec![(case, scaffolds.to_path_buf())],
        None => cases
            .iter()
            .map(|c| (c, scaffolds.join(&c.key)))
            .filter(|(_, dir)| dir.is_dir())
            .collect(),
    };
    if targets.is_empty() {
        eprintln!(
            "error: no scaffold directories for known cases under {}",
            scaffolds.display()
        );
        return EXIT_CONFIG;
    }
    let mut invalid = 0;
    for (case, dir) in targets {
        match read_scaffold_set(&dir, &case.spec) {
            Ok(set) => println!("ok     {}: {} scaffolds", case.key, set.scaffolds().len()),
            Err(err) => {
                invalid += 1;
                println!("error  {}: {err}", case.key);
            }
        }
    }
    if invalid > 0 {
        EXIT_CONFIG
    } else {
        0
    }
}
