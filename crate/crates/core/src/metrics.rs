// SPDX-License-Identifier: Apache-2.0

//! Per-scaffold success tests, per-case metrics and the benchmark score.
//!
//! A scaffold succeeds when at least one of its designed sequences refolds
//! with motifRMSD < 1 Å and scRMSD < 2 Å. Both comparisons are strict; a
//! value exactly on a threshold fails.
//!
//! Successful scaffolds of one case are clustered on their designed CA
//! traces. Each cluster is a unique solution. A cluster's novelty is the mean
//! of `1 − TM` over its members, where `TM` is a member's best TM-score to
//! the reference database, and the case novelty is the mean over clusters.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backends::{
    cluster_structures, design_sequences, predict_structure, search_novelty, BackendError, Backends, CaTrace,
    FoldRequest, FoldResult, SequenceDesignRequest, DEFAULT_NUM_SEQUENCES, DEFAULT_SAMPLING_TEMPERATURE,
};
use crate::geometry::{motif_rmsd, sc_rmsd, GeometryError};
use crate::structure_io::{MotifSpec, ScaffoldRecord, ScaffoldSet};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("scaffold {index}: {source}")]
    Backend {
        index: usize,
        #[source]
        source: BackendError,
    },
    #[error("scaffold {index}: {source}")]
    Geometry {
        index: usize,
        #[source]
        source: GeometryError,
    },
    #[error("clustering successes: {0}")]
    Cluster(#[source] BackendError),
    #[error("novelty search for scaffold {index}: {source}")]
    Search {
        index: usize,
        #[source]
        source: BackendError,
    },
    #[error("expected {expected} scaffold outcomes, got {found}")]
    Incomplete { expected: usize, found: usize },
    #[error("score needs at least one test case")]
    EmptyScore,
    #[error("invalid score parameters: {0}")]
    InvalidParams(String),
}

impl MetricsError {
    /// True when the error came from a backend rather than from the inputs.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            MetricsError::Backend { .. } | MetricsError::Cluster(_) | MetricsError::Search { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessThresholds {
    /// Å, N/CA/C over all motif residues.
    pub motif_rmsd: f64,
    /// Å, CA over all residues.
    pub sc_rmsd: f64,
}

impl Default for SuccessThresholds {
    fn default() -> Self {
        SuccessThresholds {
            motif_rmsd: 1.0,
            sc_rmsd: 2.0,
        }
    }
}

impl SuccessThresholds {
    pub fn passes(&self, motif_rmsd: f64, sc_rmsd: f64) -> bool {
        motif_rmsd < self.motif_rmsd && sc_rmsd < self.sc_rmsd
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignSettings {
    pub num_sequences: usize,
    pub sampling_temperature: f64,
    pub seed: Option<u64>,
    pub thresholds: SuccessThresholds,
}

impl Default for DesignSettings {
    fn default() -> Self {
        DesignSettings {
            num_sequences: DEFAULT_NUM_SEQUENCES,
            sampling_temperature: DEFAULT_SAMPLING_TEMPERATURE,
            seed: None,
            thresholds: SuccessThresholds::default(),
        }
    }
}

impl DesignSettings {
    pub fn request_for(&self, scaffold: &ScaffoldRecord, spec: &MotifSpec) -> SequenceDesignRequest {
        SequenceDesignRequest {
            backbone: scaffold.clone(),
            fixed_positions: spec.fixed_positions(scaffold.placements()),
            num_sequences: self.num_sequences,
            sampling_temperature: self.sampling_temperature,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub sequence: String,
    pub motif_rmsd: f64,
    pub sc_rmsd: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldOutcome {
    pub scaffold_index: usize,
    pub scaffold_name: String,
    pub sequences: Vec<SequenceRecord>,
    pub success: bool,
    /// 0-based indices into `sequences`.
    pub passing_sequence_indices: Vec<usize>,
}

impl ScaffoldOutcome {
    /// Build from per-sequence measurements; `success` and the passing list
    /// follow from the thresholds.
    pub fn from_measurements(
        scaffold: &ScaffoldRecord,
        measurements: Vec<(String, f64, f64)>,
        thresholds: &SuccessThresholds,
    ) -> Self {
        let sequences: Vec<SequenceRecord> = measurements
            .into_iter()
            .map(|(sequence, motif_rmsd, sc_rmsd)| SequenceRecord {
                passed: thresholds.passes(motif_rmsd, sc_rmsd),
                sequence,
                motif_rmsd,
                sc_rmsd,
            })
            .collect();
        let passing_sequence_indices: Vec<usize> = sequences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.passed)
            .map(|(i, _)| i)
            .collect();
        ScaffoldOutcome {
            scaffold_index: scaffold.index(),
            scaffold_name: scaffold.name().to_string(),
            success: !passing_sequence_indices.is_empty(),
            sequences,
            passing_sequence_indices,
        }
    }

    /// Passing sequence with the lowest motifRMSD; ties go to lower scRMSD,
    /// then to the earlier sequence.
    pub fn best_sequence(&self) -> Option<usize> {
        self.passing_sequence_indices.iter().copied().min_by(|&a, &b| {
            let (x, y) = (&self.sequences[a], &self.sequences[b]);
            x.motif_rmsd
                .total_cmp(&y.motif_rmsd)
                .then(x.sc_rmsd.total_cmp(&y.sc_rmsd))
                .then(a.cmp(&b))
        })
    }
}

/// Outcome plus the predicted structures it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaffoldTrial {
    pub outcome: ScaffoldOutcome,
    pub predictions: Vec<FoldResult>,
}

/// Design sequences for one scaffold, refold each and test both RMSDs.
pub fn test_scaffold(
    scaffold: &ScaffoldRecord,
    spec: &MotifSpec,
    backends: &Backends,
    settings: &DesignSettings,
) -> Result<ScaffoldTrial, MetricsError> {
    let index = scaffold.index();
    let backend = |source| MetricsError::Backend { index, source };
    let geometry = |source| MetricsError::Geometry { index, source };

    let request = settings.request_for(scaffold, spec);
    let designer = backends.designer_for(scaffold.is_ca_only());
    let designed = design_sequences(designer, &request).map_err(backend)?;

    let mut measurements = Vec::with_capacity(designed.sequences.len());
    let mut predictions = Vec::with_capacity(designed.sequences.len());
    for sequence in designed.sequences {
        let fold = FoldRequest {
            sequence,
            template: Some(scaffold.residues().to_vec()),
        };
        let predicted = predict_structure(backends.folder.as_ref(), &fold).map_err(backend)?;
        let motif = motif_rmsd(&predicted.residues, spec, scaffold.placements()).map_err(geometry)?;
        let sc = sc_rmsd(scaffold, &predicted.residues).map_err(geometry)?;
        measurements.push((fold.sequence, motif, sc));
        predictions.push(predicted);
    }
    Ok(ScaffoldTrial {
        outcome: ScaffoldOutcome::from_measurements(scaffold, measurements, &settings.thresholds),
        predictions,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    /// 1-based scaffold indices, ascending.
    pub members: Vec<usize>,
    /// Best database TM-score of each member, aligned with `members`.
    pub tm_scores: Vec<f64>,
    pub novelty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseMetrics {
    pub num_solutions: usize,
    pub novelty: f64,
    pub success_rate: f64,
    pub num_successes: usize,
    pub num_scaffolds: usize,
    pub clusters: Vec<ClusterSummary>,
}

impl CaseMetrics {
    /// Metrics from clusters of successful scaffolds with their TM-scores.
    ///
    /// # Panics
    /// If a cluster's member and TM-score lists differ in length or a
    /// cluster is empty.
    pub fn from_clusters(num_scaffolds: usize, clusters: Vec<(Vec<usize>, Vec<f64>)>) -> Self {
        let clusters: Vec<ClusterSummary> = clusters
            .into_iter()
            .map(|(members, tm_scores)| {
                assert!(!members.is_empty() && members.len() == tm_scores.len());
                let novelty = tm_scores.iter().map(|tm| 1.0 - tm).sum::<f64>() / tm_scores.len() as f64;
                ClusterSummary {
                    members,
                    tm_scores,
                    novelty,
                }
            })
            .collect();
        let num_successes = clusters.iter().map(|c| c.members.len()).sum();
        let novelty = if clusters.is_empty() {
            0.0
        } else {
            clusters.iter().map(|c| c.novelty).sum::<f64>() / clusters.len() as f64
        };
        CaseMetrics {
            num_solutions: clusters.len(),
            novelty,
            success_rate: if num_scaffolds == 0 {
                0.0
            } else {
                num_successes as f64 / num_scaffolds as f64
            },
            num_successes,
            num_scaffolds,
            clusters,
        }
    }

    /// Computed from counts so that k successes give exactly k % of 100.
    pub fn success_rate_pct(&self) -> f64 {
        if self.num_scaffolds == 0 {
            return 0.0;
        }
        100.0 * self.num_successes as f64 / self.num_scaffolds as f64
    }
}

/// Cluster the successful scaffolds and search each against the database.
pub fn summarize_case(
    scaffolds: &[ScaffoldRecord],
    outcomes: &[ScaffoldOutcome],
    backends: &Backends,
) -> Result<CaseMetrics, MetricsError> {
    if outcomes.len() != scaffolds.len() {
        return Err(MetricsError::Incomplete {
            expected: scaffolds.len(),
            found: outcomes.len(),
        });
    }
    let succeeded: BTreeSet<usize> = outcomes
        .iter()
        .filter(|o| o.success)
        .map(|o| o.scaffold_index)
        .collect();
    let successes: Vec<&ScaffoldRecord> = scaffolds.iter().filter(|s| succeeded.contains(&s.index())).collect();
    if successes.is_empty() {
        return Ok(CaseMetrics::from_clusters(scaffolds.len(), Vec::new()));
    }
    let traces: Vec<CaTrace> = successes
        .iter()
        .map(|s| CaTrace {
            name: s.name().to_string(),
            ca: s.ca_trace(),
        })
        .collect();
    let partition = cluster_structures(backends.clusterer.as_ref(), &traces).map_err(MetricsError::Cluster)?;
    let tm_scores: Vec<f64> = traces
        .par_iter()
        .zip(&successes)
        .map(|(trace, scaffold)| {
            search_novelty(backends.searcher.as_ref(), trace).map_err(|source| MetricsError::Search {
                index: scaffold.index(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let clusters = partition
        .into_iter()
        .map(|cluster| {
            let members = cluster.iter().map(|&k| successes[k].index()).collect();
            let tms = cluster.iter().map(|&k| tm_scores[k]).collect();
            (members, tms)
        })
        .collect();
    Ok(CaseMetrics::from_clusters(scaffolds.len(), clusters))
}

#[derive(Debug, Clone)]
pub struct CaseEvaluation {
    pub trials: Vec<ScaffoldTrial>,
    pub metrics: CaseMetrics,
}

/// Test every scaffold (in parallel on the current rayon pool), then
/// aggregate in scaffold order.
pub fn evaluate_scaffold_set(
    set: &ScaffoldSet,
    spec: &MotifSpec,
    backends: &Backends,
    settings: &DesignSettings,
) -> Result<CaseEvaluation, MetricsError> {
    let trials: Vec<ScaffoldTrial> = set
        .scaffolds()
        .par_iter()
        .map(|scaffold| test_scaffold(scaffold, spec, backends, settings))
        .collect::<Result<_, _>>()?;
    let outcomes: Vec<ScaffoldOutcome> = trials.iter().map(|t| t.outcome.clone()).collect();
    let metrics = summarize_case(set.scaffolds(), &outcomes, backends)?;
    Ok(CaseEvaluation { trials, metrics })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreParams {
    pub alpha: f64,
    pub scale: f64,
}

impl Default for ScoreParams {
    fn default() -> Self {
        ScoreParams {
            alpha: 5.0,
            scale: 100.0,
        }
    }
}

impl ScoreParams {
    pub fn new(alpha: f64, scale: f64) -> Result<Self, MetricsError> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(MetricsError::InvalidParams(format!("alpha {alpha} must be positive")));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(MetricsError::InvalidParams(format!("scale {scale} must be positive")));
        }
        Ok(ScoreParams { alpha, scale })
    }

    /// `(scale + α) · u / (α + u)` for one case with `u` unique solutions.
    pub fn case_contribution(&self, solutions: usize) -> f64 {
        let u = solutions as f64;
        (self.scale + self.alpha) * u / (self.alpha + u)
    }
}

/// Mean per-case contribution.
pub fn motifbench_score(solutions_per_case: &[usize], params: &ScoreParams) -> Result<f64, MetricsError> {
    if solutions_per_case.is_empty() {
        return Err(MetricsError::EmptyScore);
    }
    let total: f64 = solutions_per_case.iter().map(|&u| params.case_contribution(u)).sum();
    Ok(total / solutions_per_case.len() as f64)
}
