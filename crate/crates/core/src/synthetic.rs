// SPDX-License-Identifier: Apache-2.0

//! Deterministic scaffold construction for tests and demos.
//!
//! Scaffolds are ideal backbones (helix or extended strand) with the motif
//! backbone copied verbatim into the placed positions. They are geometrically
//! crude: only the coordinates the metrics read are meaningful.

use std::path::Path;

use crate::structure_io::{
    write_backbone_pdb, write_placement_table, BackboneResidue, MotifSpec, Placements, ScaffoldRecord, StructureError,
    PLACEMENT_TABLE_FILE,
};
use crate::{Vec3, SCAFFOLDS_PER_SET};

/// Backbone shape for the non-motif positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filler {
    Helix,
    Strand,
}

impl Filler {
    /// Full backbone residue at chain position `i` (0-based).
    pub fn residue(self, i: usize) -> BackboneResidue {
        let at = |radius: f64, degrees: f64, rise: f64| -> Vec3 {
            match self {
                Filler::Helix => {
                    let t = (100.0 * i as f64 + degrees).to_radians();
                    Vec3::new(radius * t.cos(), radius * t.sin(), 1.5 * i as f64 + rise)
                }
                Filler::Strand => {
                    let zig = if i % 2 == 0 { 1.0 } else { -1.0 };
                    Vec3::new(3.3 * i as f64 + rise, zig * (radius - 1.4), 0.4 * degrees.signum())
                }
            }
        };
        BackboneResidue {
            res_name: "GLY".into(),
            n: Some(at(1.55, -28.0, -0.84)),
            ca: at(2.3, 0.0, 0.0),
            c: Some(at(1.60, 27.0, 0.90)),
            o: Some(at(1.80, 36.0, 2.10)),
        }
    }
}

/// Conventional file name of the scaffold with 1-based `index`.
pub fn scaffold_name(index: usize) -> String {
    format!("scaffold_{index:03}.pdb")
}

/// Filler backbone with the motif written over the placed positions.
pub fn embed_motif(spec: &MotifSpec, placements: &Placements, index: usize) -> Result<ScaffoldRecord, StructureError> {
    embed_motif_with(spec, placements, index, Filler::Helix)
}

pub fn embed_motif_with(
    spec: &MotifSpec,
    placements: &Placements,
    index: usize,
    filler: Filler,
) -> Result<ScaffoldRecord, StructureError> {
    // Move the filler clear of the motif so the two never clash.
    let offset = Vec3::new(0.0, 0.0, 30.0);
    let mut residues: Vec<BackboneResidue> = (0..spec.scaffold_length())
        .map(|i| {
            let mut r = filler.residue(i);
            for p in [r.n.as_mut(), Some(&mut r.ca), r.c.as_mut(), r.o.as_mut()]
                .into_iter()
                .flatten()
            {
                *p += offset;
            }
            r
        })
        .collect();
    for segment in spec.segments() {
        let Some(&start) = placements.get(&segment.id) else {
            continue;
        };
        for (k, motif) in segment.residues.iter().enumerate() {
            let Some(slot) = residues.get_mut(start + k - 1) else {
                break;
            };
            let [n, ca, c] = motif.backbone();
            let o = motif
                .atom("O")
                .map(|a| a.coords)
                .unwrap_or(c + (c - ca).normalize() * 1.23);
            *slot = BackboneResidue {
                res_name: motif.res_name.clone(),
                n: Some(n),
                ca,
                c: Some(c),
                o: Some(o),
            };
        }
    }
    ScaffoldRecord::new(index, scaffold_name(index), residues, placements.clone(), spec)
}

/// Copy of `scaffold` with every backbone atom of segment `segment_id`
/// translated by `shift`.
pub fn displace_segment(
    scaffold: &ScaffoldRecord,
    spec: &MotifSpec,
    segment_id: char,
    shift: Vec3,
) -> Result<ScaffoldRecord, StructureError> {
    let segment = spec
        .segment(segment_id)
        .ok_or_else(|| StructureError::InvalidSpec(format!("no segment {segment_id}")))?;
    let start = scaffold.placements()[&segment_id];
    let mut residues = scaffold.residues().to_vec();
    for r in &mut residues[start - 1..start - 1 + segment.len()] {
        for p in [r.n.as_mut(), Some(&mut r.ca), r.c.as_mut(), r.o.as_mut()]
            .into_iter()
            .flatten()
        {
            *p += shift;
        }
    }
    ScaffoldRecord::new(
        scaffold.index(),
        scaffold.name(),
        residues,
        scaffold.placements().clone(),
        spec,
    )
}

/// Shift of `distance` Å pointing from the motif's backbone centroid to the
/// centroid of one segment. Pulling a segment outward this way cannot be
/// undone by rotating the whole motif.
pub fn radial_shift(spec: &MotifSpec, segment_id: char, distance: f64) -> Option<Vec3> {
    let centroid = |points: &[Vec3]| points.iter().sum::<Vec3>() / points.len() as f64;
    let segment: Vec<Vec3> = spec
        .segment(segment_id)?
        .residues
        .iter()
        .flat_map(|r| r.backbone())
        .collect();
    let direction = (centroid(&segment) - centroid(&spec.motif_backbone())).try_normalize(1e-9)?;
    Some(direction * distance)
}

/// Copy of `scaffold` keeping only CA atoms.
pub fn strip_to_ca(scaffold: &ScaffoldRecord, spec: &MotifSpec) -> Result<ScaffoldRecord, StructureError> {
    let residues = scaffold
        .residues()
        .iter()
        .map(|r| BackboneResidue::ca_only(r.res_name.clone(), r.ca))
        .collect();
    ScaffoldRecord::new(
        scaffold.index(),
        scaffold.name(),
        residues,
        scaffold.placements().clone(),
        spec,
    )
}

/// [`SCAFFOLDS_PER_SET`] copies of one embedded scaffold, indexed 1..=100.
pub fn identical_set(spec: &MotifSpec, placements: &Placements) -> Result<Vec<ScaffoldRecord>, StructureError> {
    (1..=SCAFFOLDS_PER_SET)
        .map(|i| embed_motif(spec, placements, i))
        .collect()
}

/// Write scaffolds as PDB files plus the placement table into `dir`.
pub fn write_scaffold_dir(dir: &Path, scaffolds: &[ScaffoldRecord]) -> Result<(), StructureError> {
    std::fs::create_dir_all(dir).map_err(|e| StructureError::io(dir, e))?;
    for scaffold in scaffolds {
        let path = dir.join(scaffold.name());
        std::fs::write(&path, write_backbone_pdb(scaffold.residues())).map_err(|e| StructureError::io(&path, e))?;
    }
    let table = write_placement_table(scaffolds.iter().map(|s| (s.name(), s.placements())));
    let path = dir.join(PLACEMENT_TABLE_FILE);
    std::fs::write(&path, table).map_err(|e| StructureError::io(&path, e))
}
