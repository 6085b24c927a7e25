// SPDX-License-Identifier: Apache-2.0

//! Deterministic stand-ins for the neural tools.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::fallback::superposed_tm_score;
use super::{
    BackendError, CaTrace, FoldRequest, FoldResult, SequenceDesignRequest, SequenceDesignResult, SequenceDesigner,
    StructurePredictor, StructureSearcher,
};
use crate::digest::{content_digest, digest_u64};
use crate::structure_io::{one_to_three, parse_scaffold_pdb, BackboneResidue, StructureError};
use crate::Vec3;

/// Fixed types at fixed positions, alanine everywhere else.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockDesigner;

impl SequenceDesigner for MockDesigner {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        let sequence: String = (1..=request.backbone.len())
            .map(|p| request.fixed_positions.get(&p).copied().unwrap_or('A'))
            .collect();
        Ok(SequenceDesignResult {
            sequences: vec![sequence; request.num_sequences],
        })
    }
}

/// Identity fold: returns the request's template, optionally with seeded
/// Gaussian noise on every atom. CA-only templates get N, C and O placed
/// along the trace so the prediction always carries a full backbone.
#[derive(Debug, Clone)]
pub struct MockFolder {
    noise: Option<Normal<f64>>,
    seed: u64,
}

impl MockFolder {
    pub fn new(noise_sigma: f64, seed: u64) -> Result<Self, BackendError> {
        if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
            return Err(BackendError::Configuration(format!(
                "noise_sigma {noise_sigma} must be finite and non-negative"
            )));
        }
        let noise = (noise_sigma > 0.0).then(|| Normal::new(0.0, noise_sigma).expect("sigma validated above"));
        Ok(MockFolder { noise, seed })
    }
}

impl StructurePredictor for MockFolder {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        let template = request
            .template
            .as_ref()
            .ok_or_else(|| BackendError::InvalidRequest("identity-fold mock needs a template backbone".into()))?;
        let codes: Vec<char> = request.sequence.chars().collect();
        if codes.len() != template.len() {
            return Err(BackendError::InvalidRequest(format!(
                "sequence length {} differs from template length {}",
                codes.len(),
                template.len()
            )));
        }
        let mut residues = complete_backbone(template);
        for (residue, code) in residues.iter_mut().zip(&codes) {
            residue.res_name = one_to_three(*code).unwrap_or("UNK").to_string();
        }
        if let Some(noise) = &self.noise {
            let stream = digest_u64(
                "mock-fold-noise",
                &(self.seed, &request.sequence, content_digest("template", template)),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(stream);
            let mut jitter = |p: &mut Vec3| {
                for v in p.iter_mut() {
                    *v += noise.sample(&mut rng);
                }
            };
            for r in &mut residues {
                let atoms = [r.n.as_mut(), Some(&mut r.ca), r.c.as_mut(), r.o.as_mut()];
                atoms.into_iter().flatten().for_each(&mut jitter);
            }
        }
        Ok(FoldResult { residues })
    }
}

/// Fill in missing N, C and O from the CA trace. Residues that already carry
/// them are returned unchanged.
fn complete_backbone(template: &[BackboneResidue]) -> Vec<BackboneResidue> {
    let ca: Vec<Vec3> = template.iter().map(|r| r.ca).collect();
    let last = ca.len().saturating_sub(1);
    template
        .iter()
        .enumerate()
        .map(|(i, residue)| {
            if residue.has_full_backbone() {
                return residue.clone();
            }
            let forward = (ca[(i + 1).min(last)] - ca[i.saturating_sub(1)])
                .try_normalize(1e-9)
                .unwrap_or_else(Vec3::x);
            let side = forward
                .cross(&Vec3::z())
                .try_normalize(1e-9)
                .unwrap_or_else(|| forward.cross(&Vec3::x()).normalize());
            let c = residue.c.unwrap_or(residue.ca + 1.2 * forward + 0.8 * side);
            BackboneResidue {
                res_name: residue.res_name.clone(),
                n: residue.n.or(Some(residue.ca - 1.2 * forward + 0.8 * side)),
                ca: residue.ca,
                c: Some(c),
                o: residue.o.or(Some(c + 1.23 * side)),
            }
        })
        .collect()
}

/// Structure search that either answers a constant or scans a directory of
/// PDB files with the fallback TM-score.
#[derive(Debug, Clone)]
pub struct MockSearcher {
    constant: Option<f64>,
    database: Vec<Vec<Vec3>>,
}

impl MockSearcher {
    pub fn constant(tm: f64) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&tm) {
            return Err(BackendError::Configuration(format!("constant_tm {tm} outside [0, 1]")));
        }
        Ok(MockSearcher {
            constant: Some(tm),
            database: Vec::new(),
        })
    }

    pub fn from_traces(database: Vec<Vec<Vec3>>) -> Self {
        MockSearcher {
            constant: None,
            database,
        }
    }

    /// Every `*.pdb` file in `dir` becomes one database entry.
    pub fn from_database(dir: &Path) -> Result<Self, BackendError> {
        if !dir.is_dir() {
            return Err(BackendError::Configuration(format!(
                "search database {} does not exist",
                dir.display()
            )));
        }
        let mut files: Vec<_> = std::fs::read_dir(dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "pdb"))
            .collect();
        files.sort();
        let database = files
            .iter()
            .map(|path| {
                let text = std::fs::read_to_string(path).map_err(|e| StructureError::io(path, e))?;
                let residues = parse_scaffold_pdb(&text).map_err(|e| StructureError::in_file(path, e))?;
                Ok(residues.iter().map(|r| r.ca).collect())
            })
            .collect::<Result<_, StructureError>>()?;
        Ok(Self::from_traces(database))
    }
}

impl StructureSearcher for MockSearcher {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        if let Some(tm) = self.constant {
            return Ok(tm);
        }
        self.database
            .iter()
            .filter(|entry| entry.len() == structure.ca.len())
            .map(|entry| superposed_tm_score(&structure.ca, entry))
            .try_fold(0.0f64, |best, tm| Ok(best.max(tm?)))
    }
}
