// SPDX-License-Identifier: Apache-2.0

//! Sequence design, structure prediction, structural clustering and
//! structure search behind small traits.
//!
//! Every backend is reached through [`design_sequences`],
//! [`predict_structure`], [`cluster_structures`] or [`search_novelty`],
//! which check the request going in and the answer coming out. A backend
//! that returns the wrong number of sequences, ignores a fixed position,
//! drops residues or reports a TM-score outside `[0, 1]` is rejected with
//! [`BackendError::ProtocolViolation`] before anything reaches the metrics.
//!
//! Implementations come in three kinds (see [`BackendDescriptor`]):
//! deterministic mocks, recorded fixtures replayed by content digest, and
//! external processes speaking the scratch-directory protocol in
//! [`external`].

mod descriptor;
pub mod external;
pub mod fallback;
mod mock;
mod recorded;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure_io::{is_canonical_amino_acid, BackboneResidue, MotifSpec, ScaffoldRecord, StructureError};
use crate::Vec3;

pub use descriptor::{BackendConfig, BackendDescriptor, BackendKind, DEFAULT_TIMEOUT_SECONDS};
pub use mock::{MockDesigner, MockFolder, MockSearcher};
pub use recorded::{
    RecordedBackend, RecordedFixture, Recorder, RecordingClusterer, RecordingDesigner, RecordingFolder,
    RecordingSearcher,
};

/// Sequences designed per scaffold.
pub const DEFAULT_NUM_SEQUENCES: usize = 8;
/// Sampling temperature for fixed-backbone sequence design.
pub const DEFAULT_SAMPLING_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{tool} failed (exit status {status:?}): {diagnostics}")]
    Failure {
        tool: String,
        status: Option<i32>,
        diagnostics: String,
    },
    #[error("{tool} timed out after {seconds} s")]
    Timeout { tool: String, seconds: u64 },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("backend configuration: {0}")]
    Configuration(String),
    #[error("no recorded {stage} entry for key {key}")]
    MissingRecording { stage: String, key: String },
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Input to fixed-backbone sequence design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDesignRequest {
    pub backbone: ScaffoldRecord,
    /// 1-based scaffold position → required one-letter residue type.
    pub fixed_positions: BTreeMap<usize, char>,
    pub num_sequences: usize,
    pub sampling_temperature: f64,
    pub seed: Option<u64>,
}

impl SequenceDesignRequest {
    /// Request with every non-redesignable motif residue pinned to its type.
    pub fn for_scaffold(scaffold: &ScaffoldRecord, spec: &MotifSpec, seed: Option<u64>) -> Self {
        SequenceDesignRequest {
            backbone: scaffold.clone(),
            fixed_positions: spec.fixed_positions(scaffold.placements()),
            num_sequences: DEFAULT_NUM_SEQUENCES,
            sampling_temperature: DEFAULT_SAMPLING_TEMPERATURE,
            seed,
        }
    }

    /// Selects the CA-only design variant.
    pub fn ca_only(&self) -> bool {
        self.backbone.is_ca_only()
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.num_sequences == 0 {
            return Err(BackendError::InvalidRequest("num_sequences must be at least 1".into()));
        }
        if !(self.sampling_temperature.is_finite() && self.sampling_temperature > 0.0) {
            return Err(BackendError::InvalidRequest(format!(
                "sampling temperature {} must be positive",
                self.sampling_temperature
            )));
        }
        let length = self.backbone.len();
        for (&position, &code) in &self.fixed_positions {
            if position == 0 || position > length {
                return Err(BackendError::InvalidRequest(format!(
                    "fixed position {position} outside 1..={length}"
                )));
            }
            if !is_canonical_amino_acid(code) {
                return Err(BackendError::InvalidRequest(format!(
                    "fixed position {position} has non-canonical type {code}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceDesignResult {
    pub sequences: Vec<String>,
}

/// Input to structure prediction. `template` carries the designed backbone;
/// real predictors ignore it, the identity-fold mock echoes it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRequest {
    pub sequence: String,
    pub template: Option<Vec<BackboneResidue>>,
}

/// Predicted structure with N, CA and C for every residue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub residues: Vec<BackboneResidue>,
}

/// Named CA trace handed to clustering and search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaTrace {
    pub name: String,
    pub ca: Vec<Vec3>,
}

pub trait SequenceDesigner: Send + Sync {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError>;
}

pub trait StructurePredictor: Send + Sync {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError>;
}

/// Returns clusters as lists of indices into the input slice.
pub trait StructureClusterer: Send + Sync {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError>;
}

/// Highest TM-score of a structure to anything in the reference database.
pub trait StructureSearcher: Send + Sync {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError>;
}

/// One backend per pipeline role.
#[derive(Clone)]
pub struct Backends {
    pub designer: Arc<dyn SequenceDesigner>,
    /// Used for CA-only scaffolds; falls back to `designer` when absent.
    pub designer_ca_only: Option<Arc<dyn SequenceDesigner>>,
    pub folder: Arc<dyn StructurePredictor>,
    pub clusterer: Arc<dyn StructureClusterer>,
    pub searcher: Arc<dyn StructureSearcher>,
}

impl Backends {
    pub fn from_config(config: &BackendConfig) -> Result<Self, BackendError> {
        Ok(Backends {
            designer: config.designer.build_designer()?,
            designer_ca_only: config
                .designer_ca_only
                .as_ref()
                .map(BackendDescriptor::build_designer)
                .transpose()?,
            folder: config.folder.build_folder()?,
            clusterer: match &config.clusterer {
                Some(descriptor) => descriptor.build_clusterer()?,
                None => Arc::new(fallback::SingleLinkageClusterer::default()),
            },
            searcher: config.searcher.build_searcher()?,
        })
    }

    pub fn designer_for(&self, ca_only: bool) -> &dyn SequenceDesigner {
        match (&self.designer_ca_only, ca_only) {
            (Some(designer), true) => designer.as_ref(),
            _ => self.designer.as_ref(),
        }
    }
}

/// Run sequence design and enforce the response contract.
pub fn design_sequences(
    designer: &dyn SequenceDesigner,
    request: &SequenceDesignRequest,
) -> Result<SequenceDesignResult, BackendError> {
    request.validate()?;
    let result = designer.design(request)?;
    check_design(request, &result)?;
    Ok(result)
}

fn check_design(request: &SequenceDesignRequest, result: &SequenceDesignResult) -> Result<(), BackendError> {
    let violation = |m: String| Err(BackendError::ProtocolViolation(m));
    if result.sequences.len() != request.num_sequences {
        return violation(format!(
            "expected {} sequences, got {}",
            request.num_sequences,
            result.sequences.len()
        ));
    }
    let length = request.backbone.len();
    for (k, sequence) in result.sequences.iter().enumerate() {
        let residues: Vec<char> = sequence.chars().collect();
        if residues.len() != length {
            return violation(format!(
                "sequence {k} has length {}, scaffold has {length}",
                residues.len()
            ));
        }
        if let Some(bad) = residues.iter().find(|c| !is_canonical_amino_acid(**c)) {
            return violation(format!("sequence {k} contains non-canonical residue {bad}"));
        }
        for (&position, &code) in &request.fixed_positions {
            let got = residues[position - 1];
            if got != code {
                return violation(format!(
                    "sequence {k} has {got} at fixed position {position} (expected {code})"
                ));
            }
        }
    }
    Ok(())
}

pub fn validate_sequence(sequence: &str) -> Result<(), BackendError> {
    if sequence.is_empty() {
        return Err(BackendError::InvalidRequest("empty sequence".into()));
    }
    if let Some(bad) = sequence.chars().find(|c| !is_canonical_amino_acid(*c)) {
        return Err(BackendError::InvalidRequest(format!(
            "sequence contains non-canonical residue {bad}"
        )));
    }
    Ok(())
}

/// Run structure prediction and enforce the response contract.
pub fn predict_structure(folder: &dyn StructurePredictor, request: &FoldRequest) -> Result<FoldResult, BackendError> {
    validate_sequence(&request.sequence)?;
    let result = folder.predict(request)?;
    let expected = request.sequence.chars().count();
    if result.residues.len() != expected {
        return Err(BackendError::ProtocolViolation(format!(
            "prediction has {} residues for a {expected}-residue sequence",
            result.residues.len()
        )));
    }
    for (i, residue) in result.residues.iter().enumerate() {
        if residue.n.is_none() || residue.c.is_none() {
            return Err(BackendError::ProtocolViolation(format!(
                "predicted residue {} lacks N or C",
                i + 1
            )));
        }
        let finite = ["N", "CA", "C", "O"]
            .iter()
            .filter_map(|name| residue.atom(name))
            .all(|xyz| xyz.iter().all(|v| v.is_finite()));
        if !finite {
            return Err(BackendError::ProtocolViolation(format!(
                "predicted residue {} has non-finite coordinates",
                i + 1
            )));
        }
    }
    Ok(result)
}

/// Cluster structures; the answer is returned as a canonical partition
/// (members sorted, clusters ordered by their first member).
pub fn cluster_structures(
    clusterer: &dyn StructureClusterer,
    structures: &[CaTrace],
) -> Result<Vec<Vec<usize>>, BackendError> {
    if structures.is_empty() {
        return Err(BackendError::InvalidRequest("nothing to cluster".into()));
    }
    let clusters = clusterer.cluster(structures)?;
    canonical_partition(clusters, structures.len())
}

pub(crate) fn canonical_partition(clusters: Vec<Vec<usize>>, n: usize) -> Result<Vec<Vec<usize>>, BackendError> {
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(clusters.len());
    for mut cluster in clusters {
        if cluster.is_empty() {
            return Err(BackendError::ProtocolViolation("empty cluster".into()));
        }
        for &member in &cluster {
            match seen.get_mut(member) {
                None => {
                    return Err(BackendError::ProtocolViolation(format!(
                        "cluster member {member} out of range"
                    )))
                }
                Some(true) => {
                    return Err(BackendError::ProtocolViolation(format!(
                        "structure {member} appears in two clusters"
                    )))
                }
                Some(flag) => *flag = true,
            }
        }
        cluster.sort_unstable();
        out.push(cluster);
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(BackendError::ProtocolViolation(format!(
            "structure {missing} is in no cluster"
        )));
    }
    out.sort_unstable_by_key(|c| c[0]);
    Ok(out)
}

/// Best TM-score against the reference database, checked to lie in `[0, 1]`.
pub fn search_novelty(searcher: &dyn StructureSearcher, structure: &CaTrace) -> Result<f64, BackendError> {
    if structure.ca.is_empty() {
        return Err(BackendError::InvalidRequest("empty structure".into()));
    }
    let tm = searcher.max_tm_score(structure)?;
    if !(0.0..=1.0).contains(&tm) {
        return Err(BackendError::ProtocolViolation(format!("TM-score {tm} outside [0, 1]")));
    }
    Ok(tm)
}
