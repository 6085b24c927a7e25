// SPDX-License-Identifier: Apache-2.0

//! Internal clusterer used when no external clustering tool is configured.
//!
//! Non-canonical: it approximates structural clustering with single-linkage
//! agglomeration over a TM-score computed after optimal superposition of
//! equal-length CA traces (residue i paired with residue i). Traces of
//! different length never merge.

use super::{BackendError, CaTrace, StructureClusterer};
use crate::geometry::{superpose, MIN_POINTS};
use crate::Vec3;

pub const DEFAULT_MERGE_THRESHOLD: f64 = 0.5;

/// TM-score distance scale for a chain of `length` residues.
pub fn tm_d0(length: usize) -> f64 {
    if length <= 15 {
        return 0.5;
    }
    (1.24 * (length as f64 - 15.0).cbrt() - 1.8).max(0.5)
}

/// TM-score of `a` against `b` under the RMSD-optimal superposition.
///
/// This is a lower bound on the true TM-score, which maximizes over
/// superpositions; for the near-identical and unrelated structures the
/// fallback is meant to separate, the two agree closely.
pub fn superposed_tm_score(a: &[Vec3], b: &[Vec3]) -> Result<f64, BackendError> {
    if a.len() != b.len() || a.len() < MIN_POINTS {
        return Err(BackendError::InvalidRequest(format!(
            "TM-score needs paired traces of at least {MIN_POINTS} residues ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let fit = superpose(a, b).map_err(|e| BackendError::InvalidRequest(e.to_string()))?;
    let d0 = tm_d0(b.len());
    let sum: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| {
            let d = (fit.apply(p) - q).norm() / d0;
            1.0 / (1.0 + d * d)
        })
        .sum();
    Ok((sum / b.len() as f64).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleLinkageClusterer {
    threshold: f64,
}

impl SingleLinkageClusterer {
    pub fn new(threshold: f64) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(BackendError::Configuration(format!(
                "merge threshold {threshold} outside [0, 1]"
            )));
        }
        Ok(SingleLinkageClusterer { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }
}

impl Default for SingleLinkageClusterer {
    fn default() -> Self {
        SingleLinkageClusterer {
            threshold: DEFAULT_MERGE_THRESHOLD,
        }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl StructureClusterer for SingleLinkageClusterer {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        let n = structures.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (&structures[i].ca, &structures[j].ca);
                if a.len() != b.len() {
                    continue;
                }
                let tm = if a == b { 1.0 } else { superposed_tm_score(a, b)? };
                if tm >= self.threshold {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = clusters.len();
                clusters.push(Vec::new());
            }
            clusters[slot[root]].push(i);
        }
        Ok(clusters)
    }
}
