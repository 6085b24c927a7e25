// SPDX-License-Identifier: Apache-2.0

//! Benchmark file formats.
//!
//! Motif specifications are PDB text headed by three REMARK lines (reference
//! PDB id, segment placement in the reference, required scaffold length),
//! with one chain per motif segment. Scaffolds are single-chain PDB files
//! accompanied by a placement table mapping each file to the start index of
//! every motif segment.

mod motif;
mod pdb;
mod scaffold;

use std::path::PathBuf;

use thiserror::Error;

pub use motif::{
    parse_motif_spec, read_motif_spec, write_motif_spec, MotifResidue, MotifSegment, MotifSpec, PlacementToken,
};
pub use pdb::AtomRecord;
pub use scaffold::{
    extract_motif_atoms, motif_atoms_at, parse_placement_table, parse_scaffold_pdb, parse_scaffold_set,
    read_scaffold_set, write_backbone_pdb, write_placement_table, BackboneResidue, Placements, ScaffoldRecord,
    ScaffoldSet, PLACEMENT_TABLE_FILE,
};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error("chain {chain} residue {residue}: {message}")]
    Residue { chain: char, residue: i32, message: String },
    #[error("line {line}: non-finite coordinate")]
    NonFinite { line: usize },
    #[error("invalid motif specification: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} scaffolds, found {found}")]
    SetSize { expected: usize, found: usize },
    #[error("scaffold length must be {expected}; offending files: {}", offenders.join(", "))]
    LengthMismatch { expected: usize, offenders: Vec<String> },
    #[error("placement error in {scaffold}: {message}")]
    Placement { scaffold: String, message: String },
    #[error("scaffold {0} is CA-only; motif atoms need N, CA and C")]
    CaOnly(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<StructureError>,
    },
}

impl StructureError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        StructureError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_file(path: impl Into<PathBuf>, source: StructureError) -> Self {
        StructureError::InFile {
            path: path.into(),
            source: Box::new(source),
        }
    }
}

const RESIDUE_CODES: [(&str, char); 20] = [
    ("ALA", 'A'),
    ("ARG", 'R'),
    ("ASN", 'N'),
    ("ASP", 'D'),
    ("CYS", 'C'),
    ("GLN", 'Q'),
    ("GLU", 'E'),
    ("GLY", 'G'),
    ("HIS", 'H'),
    ("ILE", 'I'),
    ("LEU", 'L'),
    ("LYS", 'K'),
    ("MET", 'M'),
    ("PHE", 'F'),
    ("PRO", 'P'),
    ("SER", 'S'),
    ("THR", 'T'),
    ("TRP", 'W'),
    ("TYR", 'Y'),
    ("VAL", 'V'),
];

/// Residue name used for motif positions whose amino-acid type is free.
pub const UNKNOWN_RESIDUE: &str = "UNK";

/// One-letter code of a canonical residue name.
pub fn three_to_one(name: &str) -> Option<char> {
    RESIDUE_CODES
        .iter()
        .find(|(three, _)| *three == name)
        .map(|&(_, one)| one)
}

/// Canonical residue name of a one-letter code.
pub fn one_to_three(code: char) -> Option<&'static str> {
    RESIDUE_CODES
        .iter()
        .find(|(_, one)| *one == code)
        .map(|&(three, _)| three)
}

pub fn is_canonical_amino_acid(code: char) -> bool {
    one_to_three(code).is_some()
}
