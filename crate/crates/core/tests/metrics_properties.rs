// SPDX-License-Identifier: Apache-2.0

mod support;

use std::sync::Arc;

use motifbench::backends::{BackendConfig, Backends, FoldRequest, MockFolder, MockSearcher, StructurePredictor};
use motifbench::geometry::sc_rmsd;
use motifbench::metrics::{
    evaluate_scaffold_set, motifbench_score, CaseMetrics, DesignSettings, ScoreParams, SuccessThresholds,
};
use motifbench::structure_io::ScaffoldSet;
use motifbench::synthetic::{self, Filler};
use proptest::prelude::*;
use support::*;

fn score(u: &[usize]) -> f64 {
    motifbench_score(u, &ScoreParams::default()).unwrap()
}

proptest! {
    #[test]
    fn score_is_bounded(u in prop::collection::vec(0usize..=100, 1..40)) {
        let s = score(&u);
        prop_assert!((0.0..105.0).contains(&s));
    }

    #[test]
    fn score_ignores_case_order(mut u in prop::collection::vec(0usize..=100, 1..40), seed in any::<u64>()) {
        let before = score(&u);
        let k = (seed as usize) % u.len();
        u.rotate_left(k);
        u.reverse();
        prop_assert!((score(&u) - before).abs() < 1e-9);
    }

    #[test]
    fn an_extra_solution_never_lowers_the_score(u in prop::collection::vec(0usize..=99, 1..40), pick in any::<prop::sample::Index>()) {
        let before = score(&u);
        let mut more = u.clone();
        let i = pick.index(u.len());
        more[i] += 1;
        prop_assert!(score(&more) > before);
    }

    #[test]
    fn contribution_matches_closed_form(u in 0usize..10_000, alpha in 0.1f64..50.0) {
        let params = ScoreParams::new(alpha, 100.0).unwrap();
        let expected = (100.0 + alpha) * u as f64 / (alpha + u as f64);
        prop_assert!((params.case_contribution(u) - expected).abs() < 1e-9);
    }

    #[test]
    fn novelty_is_mean_of_cluster_means(tms in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 1..6), 1..6)) {
        let mut next = 1;
        let clusters: Vec<(Vec<usize>, Vec<f64>)> = tms
            .iter()
            .map(|c| {
                let members = (next..next + c.len()).collect();
                next += c.len();
                (members, c.clone())
            })
            .collect();
        let metrics = CaseMetrics::from_clusters(100, clusters);
        let expected = tms.iter().map(|c| c.iter().map(|t| 1.0 - t).sum::<f64>() / c.len() as f64).sum::<f64>() / tms.len() as f64;
        prop_assert!((metrics.novelty - expected).abs() < 1e-12);
        prop_assert_eq!(metrics.num_solutions, tms.len());
        prop_assert_eq!(metrics.num_successes, next - 1);
    }
}

#[test]
fn invalid_score_parameters_are_rejected() {
    assert!(ScoreParams::new(0.0, 100.0).is_err());
    assert!(ScoreParams::new(5.0, f64::NAN).is_err());
    assert!(motifbench_score(&[], &ScoreParams::default()).is_err());
}

#[test]
fn mock_noise_gives_expected_sc_rmsd_scale() {
    // Isotropic per-coordinate noise σ gives an RMSD near σ·√3 on long chains.
    let spec = motif("27_4XOJ");
    let scaffold = synthetic::embed_motif(&spec, &spec.packed_placement(), 1).unwrap();
    for sigma in [0.1, 0.5, 1.5] {
        let mut total = 0.0;
        let trials = 100;
        for seed in 0..trials {
            let folder = MockFolder::new(sigma, seed).unwrap();
            let prediction = folder
                .predict(&FoldRequest {
                    sequence: "A".repeat(150),
                    template: Some(scaffold.residues().to_vec()),
                })
                .unwrap();
            total += sc_rmsd(&scaffold, &prediction.residues).unwrap();
        }
        let mean = total / trials as f64;
        let expected = sigma * 3f64.sqrt();
        assert!(
            (0.6 * expected..=1.4 * expected).contains(&mean),
            "σ={sigma}: mean {mean}"
        );
    }
}

fn backends(noise: f64, tm: f64) -> Backends {
    Backends::from_config(&BackendConfig::mock(noise, 3, tm)).unwrap()
}

fn set(scaffolds: Vec<motifbench::structure_io::ScaffoldRecord>) -> ScaffoldSet {
    ScaffoldSet::new("27_4XOJ", scaffolds).unwrap()
}

#[test]
fn success_rate_falls_as_fold_noise_grows() {
    let spec = motif("27_4XOJ");
    let scaffolds = identical_scaffolds("27_4XOJ");
    let settings = DesignSettings::default();
    let quiet = evaluate_scaffold_set(&set(scaffolds.clone()), &spec, &backends(0.05, 0.5), &settings).unwrap();
    let loud = evaluate_scaffold_set(&set(scaffolds), &spec, &backends(3.0, 0.5), &settings).unwrap();
    assert_eq!(quiet.metrics.success_rate, 1.0);
    assert_eq!(loud.metrics.success_rate, 0.0);
    assert_eq!(loud.metrics.num_solutions, 0);
    assert_eq!(loud.metrics.novelty, 0.0);
}

#[test]
fn mixed_set_counts_only_successes() {
    let spec = motif("27_4XOJ");
    let good = identical_scaffolds("27_4XOJ");
    let bad = displaced_scaffolds("27_4XOJ");
    let mixed: Vec<_> = good
        .into_iter()
        .zip(bad)
        .map(|(g, b)| if g.index() % 4 == 0 { g } else { b })
        .collect();
    let eval = evaluate_scaffold_set(&set(mixed), &spec, &backends(0.0, 0.7), &DesignSettings::default()).unwrap();
    assert_eq!(eval.metrics.num_successes, 25);
    assert_eq!(eval.metrics.success_rate_pct(), 25.0);
    assert_eq!(eval.metrics.num_solutions, 1);
    assert_eq!(
        eval.metrics.clusters[0].members,
        (1..=25).map(|k| 4 * k).collect::<Vec<_>>()
    );
    assert!((eval.metrics.novelty - 0.3).abs() < 1e-12);
}

#[test]
fn distinct_folds_form_distinct_clusters_with_database_novelty() {
    let spec = motif("27_4XOJ");
    let placements = spec.packed_placement();
    let scaffolds: Vec<_> = (1..=100)
        .map(|i| {
            let filler = if i <= 60 { Filler::Helix } else { Filler::Strand };
            synthetic::embed_motif_with(&spec, &placements, i, filler).unwrap()
        })
        .collect();
    // The database holds the helix fold itself, so helix scaffolds score 1.
    let database = vec![scaffolds[0].ca_trace()];
    let mut backends = backends(0.0, 0.5);
    backends.searcher = Arc::new(MockSearcher::from_traces(database));
    let eval = evaluate_scaffold_set(&set(scaffolds), &spec, &backends, &DesignSettings::default()).unwrap();
    assert_eq!(eval.metrics.num_solutions, 2);
    assert_eq!(eval.metrics.clusters[0].members.len(), 60);
    assert_eq!(eval.metrics.clusters[1].members.len(), 40);
    assert!(eval.metrics.clusters[0].novelty.abs() < 1e-9);
    let strand_tm = eval.metrics.clusters[1].tm_scores[0];
    assert!(strand_tm < 0.5);
    assert!((eval.metrics.novelty - (1.0 - strand_tm) / 2.0).abs() < 1e-9);
}

#[test]
fn thresholds_are_strict() {
    let t = SuccessThresholds::default();
    assert!(!t.passes(1.0, 0.5));
    assert!(!t.passes(0.5, 2.0));
    assert!(t.passes(0.999_999, 1.999_999));
}
