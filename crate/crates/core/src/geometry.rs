// SPDX-License-Identifier: Apache-2.0

//! Optimal rigid superposition and aligned RMSD.
//!
//! [`compute_aligned_rmsd`] centers both point lists, takes the SVD of the
//! cross-covariance `H = Σ p dᵀ = U Σ Vᵀ`, flips the axis of the smallest
//! singular value when `det(U Vᵀ) < 0`, and rotates with `R = V S Uᵀ`. The
//! RMSD is then measured directly on the rotated points rather than read off
//! the singular values.

use nalgebra::{Matrix3, SVD};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure_io::{motif_atoms_at, BackboneResidue, MotifSpec, Placements, ScaffoldRecord, StructureError};
use crate::Vec3;

/// Fewest paired points that pin down a rotation.
pub const MIN_POINTS: usize = 3;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("point lists differ in length ({pred} vs {design})")]
    DimensionMismatch { pred: usize, design: usize },
    #[error("superposition needs at least {MIN_POINTS} points, got {found}")]
    UnderDetermined { found: usize },
    #[error("coordinate set is empty")]
    Empty,
    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },
    #[error("SVD of the covariance matrix did not converge")]
    SvdFailed,
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Non-empty list of finite points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordSet(Vec<Vec3>);

impl CoordSet {
    pub fn new(points: Vec<Vec3>) -> Result<Self, GeometryError> {
        if points.is_empty() {
            return Err(GeometryError::Empty);
        }
        check_finite(&points)?;
        Ok(CoordSet(points))
    }

    pub fn points(&self) -> &[Vec3] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<Vec3> {
        self.0
    }
}

fn check_finite(points: &[Vec3]) -> Result<(), GeometryError> {
    match points.iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        Some(index) => Err(GeometryError::NonFinite { index }),
        None => Ok(()),
    }
}

/// Proper rigid motion mapping the first point list onto the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
    pub rmsd: f64,
}

impl Superposition {
    pub fn apply(&self, point: &Vec3) -> Vec3 {
        self.rotation * point + self.translation
    }
}

fn centroid(points: &[Vec3]) -> Vec3 {
    points.iter().sum::<Vec3>() / points.len() as f64
}

pub fn compute_aligned_rmsd(pred: &CoordSet, design: &CoordSet) -> Result<Superposition, GeometryError> {
    superpose(pred.points(), design.points())
}

/// [`compute_aligned_rmsd`] on raw slices; validates the same preconditions.
pub fn superpose(pred: &[Vec3], design: &[Vec3]) -> Result<Superposition, GeometryError> {
    if pred.len() != design.len() {
        return Err(GeometryError::DimensionMismatch {
            pred: pred.len(),
            design: design.len(),
        });
    }
    if pred.len() < MIN_POINTS {
        return Err(GeometryError::UnderDetermined { found: pred.len() });
    }
    check_finite(pred)?;
    check_finite(design)?;

    let pred_center = centroid(pred);
    let design_center = centroid(design);
    let covariance: Matrix3<f64> = pred
        .iter()
        .zip(design)
        .map(|(p, d)| (p - pred_center) * (d - design_center).transpose())
        .sum();

    let svd = SVD::try_new(covariance, true, true, f64::EPSILON, 0).ok_or(GeometryError::SvdFailed)?;
    let u = svd.u.ok_or(GeometryError::SvdFailed)?;
    let v = svd.v_t.ok_or(GeometryError::SvdFailed)?.transpose();

    // nalgebra does not promise an ordering, so locate the least singular value.
    let weakest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(2);
    let mut correction = Matrix3::identity();
    if (u * v.transpose()).determinant() < 0.0 {
        correction[(weakest, weakest)] = -1.0;
    }
    let rotation = v * correction * u.transpose();

    let sum_sq: f64 = pred
        .iter()
        .zip(design)
        .map(|(p, d)| (rotation * (p - pred_center) - (d - design_center)).norm_squared())
        .sum();
    Ok(Superposition {
        rotation,
        translation: design_center - rotation * pred_center,
        rmsd: (sum_sq / pred.len() as f64).sqrt(),
    })
}

/// Motif RMSD: one joint superposition over the N/CA/C atoms of every motif
/// segment, taken from the predicted structure at the given placements.
pub fn motif_rmsd(
    predicted: &[BackboneResidue],
    spec: &MotifSpec,
    placements: &Placements,
) -> Result<f64, GeometryError> {
    let predicted_motif = motif_atoms_at(predicted, placements, spec)?;
    Ok(superpose(&predicted_motif, &spec.motif_backbone())?.rmsd)
}

/// Self-consistency RMSD over CA atoms of all residues.
pub fn sc_rmsd(designed: &ScaffoldRecord, predicted: &[BackboneResidue]) -> Result<f64, GeometryError> {
    let predicted_ca: Vec<Vec3> = predicted.iter().map(|r| r.ca).collect();
    Ok(superpose(&predicted_ca, &designed.ca_trace())?.rmsd)
}
