// SPDX-License-Identifier: Apache-2.0

//! Acceptance gate. Each criterion prints one `PASS` or `FAIL` line; the
//! process exits non-zero if any criterion fails.
//!
//! The recorded real-backend criterion reads a run directory named by
//! `MOTIFBENCH_RECORDED_RUN` containing `motifs/`, `scaffolds/` and
//! `backends.toml` (recorded backends over the deposited scaffolds).

mod support;

use std::path::PathBuf;
use std::time::Instant;

use motifbench::backends::BackendConfig;
use motifbench::geometry::superpose;
use motifbench::harness::{
    read_results_csv, run_benchmark, BenchmarkReport, CaseRow, MeanStd, RunConfig, REPORT_JSON, RESULTS_CSV,
    RESULTS_TABLE,
};
use motifbench::metrics::{motifbench_score, ScoreParams};
use motifbench::structure_io::{parse_motif_spec, write_motif_spec};
use motifbench::Vec3;
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

/// Exact-arithmetic score values must agree to this.
const SCORE_TOL: f64 = 1e-9;
/// Kabsch against the refined brute-force optimum.
const ORACLE_TOL: f64 = 1e-6;
/// Rigid-motion invariance and rotation properness.
const RIGID_TOL: f64 = 1e-9;
const ORACLE_SETS: usize = 1000;
/// Published totals are given to two decimals.
const PUBLISHED_SCORE_TOL: f64 = 0.005;
/// Published novelty is given to three decimals.
const PUBLISHED_NOVELTY_TOL: f64 = 0.0005;
/// Constant database TM-score returned by the mock searcher.
const MOCK_TM: f64 = 0.62;

type Outcome = Result<String, String>;

fn check(condition: bool, failure: impl FnOnce() -> String) -> Result<(), String> {
    if condition {
        Ok(())
    } else {
        Err(failure())
    }
}

fn score(u: &[usize]) -> f64 {
    motifbench_score(u, &ScoreParams::default()).unwrap()
}

fn score_golden_values() -> Outcome {
    let cases: [(&str, Vec<usize>, f64); 6] = [
        ("u=1", vec![1], 17.5),
        ("u=5", vec![5], 52.5),
        ("u=50", vec![50], 105.0 * 50.0 / 55.0),
        ("30 x u=1", vec![1; 30], 17.5),
        (
            "{100, 0 x 29}",
            std::iter::once(100).chain(std::iter::repeat(0).take(29)).collect(),
            100.0 / 30.0,
        ),
        ("all zero", vec![0; 30], 0.0),
    ];
    for (name, u, expected) in &cases {
        let got = score(u);
        check((got - expected).abs() <= SCORE_TOL, || {
            format!("{name}: {got} != {expected}")
        })?;
    }
    // The published single-case value for u=50 is quoted to one decimal.
    let u50 = score(&[50]);
    check(format!("{u50:.1}") == "95.5", || format!("u=50 rounds to {u50:.1}"))?;
    Ok(format!("{} worked values within {SCORE_TOL:e}", cases.len()))
}

fn kabsch_oracle_suite() -> Outcome {
    let grid = rotation_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b61_6273_6368);
    let mut worst_gap = 0.0f64;
    let mut worst_invariance = 0.0f64;
    let mut worst_proper = 0.0f64;
    for set in 0..ORACLE_SETS {
        let n = rng.random_range(3..=50);
        let pred = random_points(&mut rng, n, 15.0);
        let design: Vec<Vec3> = match set % 3 {
            // Noisy rigid copy.
            0 => {
                let r = random_rotation(&mut rng);
                let sigma = rng.random_range(0.01..2.0);
                pred.iter()
                    .map(|p| r * p + random_points(&mut rng, 1, sigma)[0])
                    .collect()
            }
            // Mirror image: the best proper rotation is not a reflection.
            1 => pred
                .iter()
                .map(|p| Vec3::new(-p.x, p.y, p.z) + random_points(&mut rng, 1, 0.2)[0])
                .collect(),
            // Unrelated points.
            _ => random_points(&mut rng, n, 15.0),
        };
        let fit = superpose(&pred, &design).map_err(|e| format!("set {set}: {e}"))?;
        let oracle = brute_force_rmsd(&grid, &pred, &design);
        check(fit.rmsd <= oracle.grid_rmsd + RIGID_TOL, || {
            format!("set {set}: Kabsch {} worse than grid {}", fit.rmsd, oracle.grid_rmsd)
        })?;
        let resolution = rms_radius(&pred) * GRID_COVERING_RAD;
        check(oracle.grid_rmsd - fit.rmsd <= resolution, || {
            format!(
                "set {set}: grid {} beyond resolution {resolution} of {}",
                oracle.grid_rmsd, fit.rmsd
            )
        })?;
        worst_gap = worst_gap.max((fit.rmsd - oracle.refined_rmsd).abs());

        let r = random_rotation(&mut rng);
        let t = Vec3::new(
            rng.random_range(-40.0..40.0),
            rng.random_range(-40.0..40.0),
            rng.random_range(-40.0..40.0),
        );
        let moved: Vec<Vec3> = pred.iter().map(|p| r * p + t).collect();
        let again = superpose(&moved, &design).map_err(|e| format!("set {set}: {e}"))?;
        worst_invariance = worst_invariance.max((again.rmsd - fit.rmsd).abs());

        let det = (fit.rotation.determinant() - 1.0).abs();
        let ortho = (fit.rotation.transpose() * fit.rotation - Matrix3::identity())
            .abs()
            .max();
        worst_proper = worst_proper.max(det.max(ortho));
    }
    check(worst_gap <= ORACLE_TOL, || format!("oracle gap {worst_gap:e}"))?;
    check(worst_invariance <= RIGID_TOL, || {
        format!("rigid-motion drift {worst_invariance:e}")
    })?;
    check(worst_proper <= RIGID_TOL, || {
        format!("improper rotation, deviation {worst_proper:e}")
    })?;
    Ok(format!(
        "{ORACLE_SETS} sets: oracle gap {worst_gap:.1e}, invariance {worst_invariance:.1e}, properness {worst_proper:.1e}"
    ))
}

fn format_fidelity() -> Outcome {
    for (case, pdb_id, group, length, residues, _) in PROBLEMS {
        let key = problem_key(case, pdb_id);
        let text = read(&motifs_dir().join(format!("{key}.pdb")));
        let spec = parse_motif_spec(&text).map_err(|e| format!("{key}: {e}"))?;
        let segments = spec.segments().len();
        check(
            segments == residue_ranges(residues).len() && segments.min(3) as u8 == group,
            || format!("{key}: {segments} segments for group {group}"),
        )?;
        check(spec.scaffold_length() == length, || {
            format!("{key}: length {}", spec.scaffold_length())
        })?;
    }
    let text = read(&motifs_dir().join("27_4XOJ.pdb"));
    let spec = parse_motif_spec(&text).map_err(|e| e.to_string())?;
    check(write_motif_spec(&spec) == text, || {
        "27_4XOJ does not round-trip byte for byte".into()
    })?;
    Ok("30 motifs parse with matching groups; 27_4XOJ round-trips byte for byte".into())
}

fn mock_run(ws: &Workspace, out: &str) -> Result<BenchmarkReport, String> {
    let mut config = RunConfig::new(ws.motifs(), ws.scaffolds(), ws.backends(), ws.out(out));
    config.seed = 2024;
    run_benchmark(&config).map_err(|e| format!("{out}: {e}"))
}

fn end_to_end_mock_pipeline() -> Outcome {
    let ws = Workspace::new();
    ws.add_case("27_4XOJ", &identical_scaffolds("27_4XOJ"));
    ws.add_case("21_1B73", &displaced_scaffolds("21_1B73"));
    ws.write_backends(&BackendConfig::mock(0.0, 0, MOCK_TM));
    let report = mock_run(&ws, "run")?;

    let row = |case: u32| {
        report
            .rows
            .iter()
            .find(|r| r.case == case)
            .cloned()
            .ok_or(format!("no row {case}"))
    };
    let verbatim = row(27)?;
    let displaced = row(21)?;
    // All 100 scaffolds succeed and share one fold; every member scores MOCK_TM.
    let hand_novelty = 1.0 - MOCK_TM;
    check(verbatim.success_rate_pct == 100.0, || {
        format!("verbatim success {}", verbatim.success_rate_pct)
    })?;
    check(verbatim.num_solutions == 1, || {
        format!("verbatim solutions {}", verbatim.num_solutions)
    })?;
    check((verbatim.novelty - hand_novelty).abs() <= SCORE_TOL, || {
        format!("novelty {} != {hand_novelty}", verbatim.novelty)
    })?;
    check(
        displaced.success_rate_pct == 0.0 && displaced.num_solutions == 0,
        || format!("displaced: {displaced:?}"),
    )?;
    let params = ScoreParams::default();
    check(params.case_contribution(displaced.num_solutions) == 0.0, || {
        "displaced contributes".into()
    })?;
    // One solution contributes 105/6 = 17.5; the mean over two cases is 8.75.
    check((report.score - 8.75).abs() <= SCORE_TOL, || {
        format!("score {}", report.score)
    })?;
    Ok(format!(
        "verbatim: rate 1.0, 1 solution, novelty {:.2}; displaced: rate 0; score {:.2}",
        verbatim.novelty, report.score
    ))
}

fn determinism_and_resume() -> Outcome {
    let ws = Workspace::new();
    ws.add_case("27_4XOJ", &identical_scaffolds("27_4XOJ"));
    ws.add_case("12_4JHW", &displaced_scaffolds("12_4JHW"));
    ws.write_backends(&BackendConfig::mock(0.35, 7, MOCK_TM));
    mock_run(&ws, "cold_a")?;
    mock_run(&ws, "cold_b")?;

    let mut partial = RunConfig::new(ws.motifs(), ws.scaffolds(), ws.backends(), ws.out("resumed"));
    partial.seed = 2024;
    partial.stop_after = Some(70);
    check(run_benchmark(&partial).is_err(), || "interrupted run completed".into())?;
    mock_run(&ws, "resumed")?;

    for file in [REPORT_JSON, RESULTS_CSV, RESULTS_TABLE] {
        let a = read(&ws.out("cold_a").join(file));
        check(a == read(&ws.out("cold_b").join(file)), || {
            format!("{file} differs between cold runs")
        })?;
        check(a == read(&ws.out("resumed").join(file)), || {
            format!("{file} differs after resume")
        })?;
    }
    Ok("two cold runs and an interrupted-then-resumed run agree byte for byte".into())
}

fn reference_rows() -> Vec<CaseRow> {
    let path = fixtures_dir().join("reference/rfdiffusion_esmfold.csv");
    read_results_csv(&read(&path)).unwrap()
}

/// Rows taken verbatim from the published ESMFold columns, scored as a run.
fn published_rows_reproduce_published_score() -> Outcome {
    let rows = reference_rows();
    let report = BenchmarkReport::from_rows(rows.clone(), 1, 0, ScoreParams::default()).map_err(|e| e.to_string())?;
    let mean_novelty = rows
        .iter()
        .filter(|r| r.num_solutions > 0)
        .map(|r| r.novelty)
        .sum::<f64>()
        / rows.iter().filter(|r| r.num_solutions > 0).count() as f64;
    let published = 28.05;
    check((report.score - published).abs() <= PUBLISHED_SCORE_TOL, || {
        format!(
            "30 published rows score {:.4}, published total {published} (mean novelty of solved cases {mean_novelty:.3})",
            report.score
        )
    })?;
    Ok(format!("score {:.2}", report.score))
}

fn recorded_run_reproduces_published_table() -> Outcome {
    let Some(dir) = std::env::var_os("MOTIFBENCH_RECORDED_RUN").map(PathBuf::from) else {
        return Err("no recorded real-backend run available (set MOTIFBENCH_RECORDED_RUN)".into());
    };
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = RunConfig::new(
        dir.join("motifs"),
        dir.join("scaffolds"),
        dir.join("backends.toml"),
        out.path(),
    );
    let report = run_benchmark(&config).map_err(|e| e.to_string())?;
    for (got, want) in report.rows.iter().zip(reference_rows()) {
        check(
            got.case == want.case
                && got.num_solutions == want.num_solutions
                && (got.novelty - want.novelty).abs() <= PUBLISHED_NOVELTY_TOL
                && got.success_rate_pct.round() == want.success_rate_pct,
            || format!("case {}: got {got:?}, published {want:?}", want.case),
        )?;
    }
    check(report.rows.len() == 30, || format!("{} rows", report.rows.len()))?;
    check((report.score - 28.05).abs() <= PUBLISHED_SCORE_TOL, || {
        format!("score {:.4}", report.score)
    })?;
    Ok(format!("30 rows match; score {:.2}", report.score))
}

fn replicate_aggregation_format() -> Outcome {
    // Five evaluations of one case with success rates 2, 2, 2, 2, 3 percent.
    let spread = MeanStd::of(&[2.0, 2.0, 2.0, 2.0, 3.0]);
    check(spread.to_string() == "2.20 ± 0.45", || format!("rendered {spread}"))?;
    let constant = MeanStd::of(&[44.0; 4]);
    check(constant.to_string() == "44.00 ± 0.00", || {
        format!("rendered {constant}")
    })?;

    let ws = Workspace::new();
    ws.add_case("27_4XOJ", &identical_scaffolds("27_4XOJ"));
    ws.write_backends(&BackendConfig::mock(0.2, 1, MOCK_TM));
    let mut config = RunConfig::new(ws.motifs(), ws.scaffolds(), ws.backends(), ws.out("reps"));
    config.replicate_count = 4;
    let report = run_benchmark(&config).map_err(|e| e.to_string())?;
    let table = read(&ws.out("reps").join(RESULTS_TABLE));
    let summary = report.summary.ok_or("no replicate summary")?;
    check(table.contains(&summary.cases[0].success_rate_pct.to_string()), || {
        table.clone()
    })?;
    check(
        table.contains(&format!("MotifBench score: {} (4 replicates)", summary.score)),
        || table.clone(),
    )?;
    Ok(format!(
        "mean ± std rendered as in the published replicate table; run score {}",
        summary.score
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("score golden values", score_golden_values),
        ("Kabsch oracle suite", kabsch_oracle_suite),
        ("format fidelity", format_fidelity),
        ("end-to-end mock pipeline", end_to_end_mock_pipeline),
        ("determinism and resume", determinism_and_resume),
        (
            "published ESMFold rows give the published score",
            published_rows_reproduce_published_score,
        ),
        (
            "recorded real-backend run reproduces the published table",
            recorded_run_reproduces_published_table,
        ),
        ("replicate aggregation format", replicate_aggregation_format),
    ];
    let mut failed = 0;
    for (name, criterion) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(criterion).unwrap_or_else(|panic| {
            let message = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {message}"))
        });
        let seconds = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({seconds:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({seconds:.1}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
