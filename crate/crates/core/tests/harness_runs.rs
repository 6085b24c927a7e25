// SPDX-License-Identifier: Apache-2.0

mod support;

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use motifbench::backends::{
    BackendConfig, BackendDescriptor, BackendError, Backends, FoldRequest, FoldResult, RecordedFixture, Recorder,
    StructurePredictor,
};
use motifbench::harness::{
    read_results_csv, run_benchmark, run_with_backends, BenchmarkReport, HarnessError, RunConfig, COMPUTE_TIME_JSON,
    REPORT_JSON, RESULTS_CSV, RESULTS_TABLE, STATUS_JSON, SUMMARY_CSV,
};
use support::*;

const REPORT_FILES: [&str; 3] = [REPORT_JSON, RESULTS_CSV, RESULTS_TABLE];

/// Two cases: one solvable, one with a displaced motif.
fn two_case_workspace(config: &BackendConfig) -> Workspace {
    let ws = Workspace::new();
    ws.add_case("27_4XOJ", &identical_scaffolds("27_4XOJ"));
    ws.add_case("21_1B73", &displaced_scaffolds("21_1B73"));
    ws.write_backends(config);
    ws
}

fn run_config(ws: &Workspace, out: &str) -> RunConfig {
    let mut config = RunConfig::new(ws.motifs(), ws.scaffolds(), ws.backends(), ws.out(out));
    config.seed = 17;
    config
}

/// Reports minus wall-clock timings, which are never written into them.
fn untimed(mut report: BenchmarkReport) -> BenchmarkReport {
    report.compute_time = Default::default();
    report
}

fn noisy() -> BackendConfig {
    BackendConfig::mock(0.3, 4, 0.55)
}

#[test]
fn cold_runs_are_byte_identical() {
    let ws = two_case_workspace(&noisy());
    let a = run_benchmark(&run_config(&ws, "a")).unwrap();
    let mut parallel = run_config(&ws, "b");
    parallel.worker_count = Some(1);
    let b = run_benchmark(&parallel).unwrap();
    assert_eq!(untimed(a), untimed(b));
    for file in REPORT_FILES {
        assert_eq!(read(&ws.out("a").join(file)), read(&ws.out("b").join(file)), "{file}");
    }
    let rows = read_results_csv(&read(&ws.out("a").join(RESULTS_CSV))).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].case, rows[0].success_rate_pct), (21, 0.0));
    assert_eq!((rows[1].case, rows[1].num_solutions), (27, 1));
    assert!(ws.out("a").join(COMPUTE_TIME_JSON).is_file());
    assert!(read(&ws.out("a").join(STATUS_JSON)).contains("\"complete\""));
}

#[test]
fn interrupted_run_resumes_to_the_same_report() {
    let ws = two_case_workspace(&noisy());
    run_benchmark(&run_config(&ws, "cold")).unwrap();

    let mut partial = run_config(&ws, "resumed");
    partial.stop_after = Some(130);
    let err = run_benchmark(&partial).unwrap_err();
    assert!(matches!(err, HarnessError::Interrupted { .. }));
    assert_eq!(err.exit_code(), 4);
    assert!(read(&ws.out("resumed").join(STATUS_JSON)).contains("\"incomplete\""));
    assert!(!ws.out("resumed").join(REPORT_JSON).exists());

    run_benchmark(&run_config(&ws, "resumed")).unwrap();
    for file in REPORT_FILES {
        assert_eq!(
            read(&ws.out("cold").join(file)),
            read(&ws.out("resumed").join(file)),
            "{file}"
        );
    }
}

struct CountingFolder {
    inner: Arc<dyn StructurePredictor>,
    calls: Arc<AtomicUsize>,
}

impl StructurePredictor for CountingFolder {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.predict(request)
    }
}

fn counted(config: &BackendConfig) -> (Backends, Arc<AtomicUsize>) {
    let mut backends = Backends::from_config(config).unwrap();
    let calls = Arc::new(AtomicUsize::new(0));
    backends.folder = Arc::new(CountingFolder {
        inner: backends.folder.clone(),
        calls: calls.clone(),
    });
    (backends, calls)
}

#[test]
fn rerun_in_the_same_directory_is_served_from_cache() {
    let config = noisy();
    let ws = two_case_workspace(&config);
    let run = run_config(&ws, "out");

    let (backends, calls) = counted(&config);
    let first = run_with_backends(&run, &config, backends).unwrap();
    assert!(calls.load(Ordering::SeqCst) > 0);

    let (backends, calls) = counted(&config);
    let second = run_with_backends(&run, &config, backends).unwrap();
    assert_eq!(calls.load(Ordering::SeqCst), 0);
    assert_eq!(untimed(first), untimed(second));

    // A different backend configuration gets its own cache namespace.
    let other = BackendConfig::mock(0.3, 5, 0.55);
    let (backends, calls) = counted(&other);
    run_with_backends(&run, &other, backends).unwrap();
    assert!(calls.load(Ordering::SeqCst) > 0);
}

#[test]
fn recorded_run_replays_without_the_original_backends() {
    let config = noisy();
    let ws = two_case_workspace(&config);
    let live_run = run_config(&ws, "live");

    let recorder = Recorder::new();
    let live_backends = Backends::from_config(&config).unwrap().recording(&recorder);
    run_with_backends(&live_run, &config, live_backends).unwrap();
    let fixture = ws.out("recorded.json");
    recorder.save(&fixture).unwrap();

    let replay = BackendConfig {
        designer: BackendDescriptor::recorded("recorded.json"),
        designer_ca_only: None,
        folder: BackendDescriptor::recorded("recorded.json"),
        clusterer: Some(BackendDescriptor::recorded("recorded.json")),
        searcher: BackendDescriptor::recorded("recorded.json"),
    };
    let replay_path = ws.out("replay.toml");
    std::fs::write(&replay_path, replay.to_toml_string()).unwrap();
    let mut replay_run = run_config(&ws, "replayed");
    replay_run.backend_config_path = replay_path;
    run_benchmark(&replay_run).unwrap();

    for file in [RESULTS_CSV, RESULTS_TABLE] {
        assert_eq!(
            read(&ws.out("live").join(file)),
            read(&ws.out("replayed").join(file)),
            "{file}"
        );
    }
    let fixture = RecordedFixture::load(&fixture).unwrap();
    assert!(!fixture.fold.is_empty());
    assert_eq!(fixture.cluster.len(), 1);
}

#[test]
fn replay_of_an_unrecorded_request_is_a_backend_failure() {
    let ws = two_case_workspace(&noisy());
    let empty = ws.out("empty.json");
    RecordedFixture::default().save(&empty).unwrap();
    let config = BackendConfig {
        designer: BackendDescriptor::recorded(&empty),
        designer_ca_only: None,
        folder: BackendDescriptor::recorded(&empty),
        clusterer: None,
        searcher: BackendDescriptor::recorded(&empty),
    };
    std::fs::write(ws.backends(), config.to_toml_string()).unwrap();
    let err = run_benchmark(&run_config(&ws, "out")).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");
    let status = read(&ws.out("out").join(STATUS_JSON));
    assert!(
        status.contains("\"incomplete\"") && status.contains("no recorded"),
        "{status}"
    );
}

#[test]
fn replicates_produce_summary_with_mean_and_std() {
    let ws = two_case_workspace(&noisy());
    let mut config = run_config(&ws, "out");
    config.replicate_count = 3;
    let report = run_benchmark(&config).unwrap();
    assert_eq!(report.rows.len(), 6);
    assert_eq!(report.replicate_scores.len(), 3);
    let summary = report.summary.as_ref().unwrap();
    assert_eq!(summary.cases.len(), 2);
    let table = read(&ws.out("out").join(RESULTS_TABLE));
    assert!(table.contains("1.00 ± 0.00"), "{table}");
    assert!(table.contains("(3 replicates)"));
    assert!(ws.out("out").join(SUMMARY_CSV).is_file());
    for r in 0..3 {
        assert!(ws
            .out("out")
            .join("cases/27_4XOJ")
            .join(format!("replicate_{r}/metrics.json"))
            .is_file());
    }
}

#[test]
fn per_scaffold_artifacts_are_written() {
    let ws = two_case_workspace(&noisy());
    run_benchmark(&run_config(&ws, "out")).unwrap();
    let dir = ws.out("out").join("cases/27_4XOJ/replicate_0/scaffold_042");
    let rmsd = read(&dir.join("rmsd.tsv"));
    assert_eq!(rmsd.lines().count(), 9);
    assert!(rmsd.starts_with("sequence\tmotif_rmsd\tsc_rmsd\tpassed\n"));
    assert_eq!(read(&dir.join("sequences.fa")).matches('>').count(), 8);
    assert!(dir.join("prediction_7.pdb").is_file());
}

#[test]
fn case_filter_selects_and_validates() {
    let ws = two_case_workspace(&noisy());
    let mut config = run_config(&ws, "out");
    config.case_filter = Some(BTreeSet::from([27]));
    let report = run_benchmark(&config).unwrap();
    assert_eq!(report.rows.len(), 1);
    assert_eq!(report.score, 17.5);

    config.case_filter = Some(BTreeSet::from([5]));
    let err = run_benchmark(&config).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn configuration_problems_exit_with_code_two() {
    let ws = two_case_workspace(&noisy());

    let mut missing_backends = run_config(&ws, "out");
    missing_backends.backend_config_path = ws.out("nope.toml");
    assert_eq!(run_benchmark(&missing_backends).unwrap_err().exit_code(), 2);

    std::fs::write(ws.out("bad.toml"), "[designer]\nkind = \"telepathic\"\n").unwrap();
    let mut bad_backends = run_config(&ws, "out");
    bad_backends.backend_config_path = ws.out("bad.toml");
    assert_eq!(run_benchmark(&bad_backends).unwrap_err().exit_code(), 2);

    let mut zero_workers = run_config(&ws, "out");
    zero_workers.worker_count = Some(0);
    assert_eq!(run_benchmark(&zero_workers).unwrap_err().exit_code(), 2);

    std::fs::remove_dir_all(ws.scaffolds().join("21_1B73")).unwrap();
    let err = run_benchmark(&run_config(&ws, "out")).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("21_1B73"));
}

#[test]
fn malformed_scaffold_is_an_input_error() {
    let ws = two_case_workspace(&noisy());
    std::fs::write(ws.scaffolds().join("27_4XOJ/scaffold_003.pdb"), "ATOM  garbage\n").unwrap();
    let err = run_benchmark(&run_config(&ws, "out")).unwrap_err();
    assert!(matches!(err, HarnessError::Input { .. }), "{err}");
    assert_eq!(err.exit_code(), 2);
}
