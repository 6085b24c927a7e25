// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pdb::{format_atom_line, is_atom_record, parse_atom_line, AtomLine, AtomRecord};
use super::{three_to_one, StructureError, UNKNOWN_RESIDUE};
use crate::Vec3;

const REMARK_ID: &str = "REMARK 1 Reference PDB ID";
const REMARK_PLACEMENT: &str = "REMARK 2 Motif Segment Placement in Reference PDB";
const REMARK_LENGTH: &str = "REMARK 3 Length for Designed Scaffolds";

pub(crate) const BACKBONE_ATOMS: [&str; 3] = ["N", "CA", "C"];

/// One motif residue: backbone N/CA/C are always present, O and side-chain
/// atoms are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifResidue {
    pub res_name: String,
    pub redesignable: bool,
    pub atoms: Vec<AtomRecord>,
}

impl MotifResidue {
    pub fn atom(&self, name: &str) -> Option<&AtomRecord> {
        self.atoms.iter().find(|a| a.name == name)
    }

    /// N, CA and C coordinates in that order.
    pub fn backbone(&self) -> [Vec3; 3] {
        BACKBONE_ATOMS.map(|name| {
            self.atom(name)
                .map(|a| a.coords)
                .expect("motif residues always carry N, CA and C")
        })
    }

    /// One-letter code for a fixed-type residue, `None` when redesignable.
    pub fn fixed_type(&self) -> Option<char> {
        if self.redesignable {
            None
        } else {
            three_to_one(&self.res_name)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifSegment {
    pub id: char,
    pub residues: Vec<MotifResidue>,
}

impl MotifSegment {
    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }
}

/// Element of the REMARK 2 placement string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlacementToken {
    Gap(usize),
    Segment(char),
}

impl fmt::Display for PlacementToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlacementToken::Gap(n) => write!(f, "{n}"),
            PlacementToken::Segment(id) => write!(f, "{id}"),
        }
    }
}

/// A benchmark problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotifSpec {
    reference_pdb_id: String,
    segments: Vec<MotifSegment>,
    scaffold_length: usize,
    reference_placement: Vec<PlacementToken>,
}

impl MotifSpec {
    pub fn new(
        reference_pdb_id: impl Into<String>,
        segments: Vec<MotifSegment>,
        scaffold_length: usize,
        reference_placement: Vec<PlacementToken>,
    ) -> Result<Self, StructureError> {
        let spec = MotifSpec {
            reference_pdb_id: reference_pdb_id.into(),
            segments,
            scaffold_length,
            reference_placement,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), StructureError> {
        let invalid = |m: String| Err(StructureError::InvalidSpec(m));
        let id = &self.reference_pdb_id;
        if id.len() != 4 || !id.chars().all(|c| c.is_ascii_alphanumeric()) {
            return invalid(format!("reference PDB id `{id}` is not 4 alphanumerics"));
        }
        if self.segments.is_empty() {
            return invalid("motif has no segments".into());
        }
        let mut seen = BTreeSet::new();
        for segment in &self.segments {
            if segment.is_empty() {
                return invalid(format!("segment {} is empty", segment.id));
            }
            if !seen.insert(segment.id) {
                return invalid(format!("duplicate segment id {}", segment.id));
            }
            for (pos, residue) in segment.residues.iter().enumerate() {
                let residue_no = pos as i32 + 1;
                for name in BACKBONE_ATOMS {
                    if residue.atom(name).is_none() {
                        return Err(StructureError::Residue {
                            chain: segment.id,
                            residue: residue_no,
                            message: format!("missing backbone atom {name}"),
                        });
                    }
                }
                if residue.res_name == UNKNOWN_RESIDUE && !residue.redesignable {
                    return Err(StructureError::Residue {
                        chain: segment.id,
                        residue: residue_no,
                        message: "UNK residue must be redesignable".into(),
                    });
                }
                if !residue.redesignable && three_to_one(&residue.res_name).is_none() {
                    return Err(StructureError::Residue {
                        chain: segment.id,
                        residue: residue_no,
                        message: format!("unsupported residue type {}", residue.res_name),
                    });
                }
            }
        }
        let mut mentioned = BTreeMap::new();
        for token in &self.reference_placement {
            if let PlacementToken::Segment(id) = token {
                if !seen.contains(id) {
                    return invalid(format!("placement names unknown segment {id}"));
                }
                *mentioned.entry(*id).or_insert(0usize) += 1;
            }
        }
        for id in &seen {
            if mentioned.get(id) != Some(&1) {
                return invalid(format!("placement must mention segment {id} exactly once"));
            }
        }
        let motif = self.motif_residue_count();
        if self.scaffold_length < motif {
            return invalid(format!(
                "scaffold length {} is shorter than the {} motif residues",
                self.scaffold_length, motif
            ));
        }
        Ok(())
    }

    pub fn reference_pdb_id(&self) -> &str {
        &self.reference_pdb_id
    }

    pub fn segments(&self) -> &[MotifSegment] {
        &self.segments
    }

    pub fn segment(&self, id: char) -> Option<&MotifSegment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn scaffold_length(&self) -> usize {
        self.scaffold_length
    }

    pub fn reference_placement(&self) -> &[PlacementToken] {
        &self.reference_placement
    }

    pub fn motif_residue_count(&self) -> usize {
        self.segments.iter().map(MotifSegment::len).sum()
    }

    pub fn atom_count(&self) -> usize {
        self.segments
            .iter()
            .flat_map(|s| &s.residues)
            .map(|r| r.atoms.len())
            .sum()
    }

    /// Motif N/CA/C coordinates: segment order, then residue order, then
    /// N → CA → C.
    pub fn motif_backbone(&self) -> Vec<Vec3> {
        self.segments
            .iter()
            .flat_map(|s| &s.residues)
            .flat_map(|r| r.backbone())
            .collect()
    }

    /// `(segment id, 1-based residue)` pairs whose type may be redesigned.
    pub fn redesignable_positions(&self) -> BTreeSet<(char, usize)> {
        self.segments
            .iter()
            .flat_map(|s| {
                s.residues
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.redesignable)
                    .map(move |(i, _)| (s.id, i + 1))
            })
            .collect()
    }

    /// Mark additional positions redesignable on top of the UNK residues.
    pub fn with_redesign_list(mut self, positions: &[(char, usize)]) -> Result<Self, StructureError> {
        for &(id, residue) in positions {
            let segment = self
                .segments
                .iter_mut()
                .find(|s| s.id == id)
                .ok_or_else(|| StructureError::InvalidSpec(format!("redesign list names unknown segment {id}")))?;
            let slot = residue
                .checked_sub(1)
                .and_then(|i| segment.residues.get_mut(i))
                .ok_or_else(|| {
                    StructureError::InvalidSpec(format!("redesign position {id}{residue} is outside the segment"))
                })?;
            slot.redesignable = true;
        }
        Ok(self)
    }

    /// Scaffold positions (1-based) whose residue type is pinned by the motif.
    pub fn fixed_positions(&self, placements: &BTreeMap<char, usize>) -> BTreeMap<usize, char> {
        let mut fixed = BTreeMap::new();
        for segment in &self.segments {
            let Some(&start) = placements.get(&segment.id) else {
                continue;
            };
            for (offset, residue) in segment.residues.iter().enumerate() {
                if let Some(code) = residue.fixed_type() {
                    fixed.insert(start + offset, code);
                }
            }
        }
        fixed
    }

    /// Placement of every segment inside a scaffold of the required length.
    ///
    /// Segments keep their reference order and inter-segment gaps; gaps are
    /// shrunk proportionally when the reference spacing does not fit, and the
    /// remaining residues are split between the two termini.
    pub fn packed_placement(&self) -> BTreeMap<char, usize> {
        let order: Vec<char> = self
            .reference_placement
            .iter()
            .filter_map(|t| match t {
                PlacementToken::Segment(id) => Some(*id),
                PlacementToken::Gap(_) => None,
            })
            .collect();
        let mut inner_gaps = Vec::new();
        let mut pending: Option<usize> = None;
        let mut started = false;
        for token in &self.reference_placement {
            match token {
                PlacementToken::Segment(_) => {
                    if started {
                        inner_gaps.push(pending.unwrap_or(0));
                    }
                    started = true;
                    pending = None;
                }
                PlacementToken::Gap(n) => pending = Some(pending.unwrap_or(0) + n),
            }
        }
        let motif = self.motif_residue_count();
        let free = self.scaffold_length - motif;
        let inner_total: usize = inner_gaps.iter().sum();
        if inner_total > free {
            for gap in &mut inner_gaps {
                *gap = *gap * free / inner_total;
            }
        }
        let used: usize = inner_gaps.iter().sum();
        let mut start = 1 + (free - used) / 2;
        let mut placements = BTreeMap::new();
        for (k, id) in order.iter().enumerate() {
            placements.insert(*id, start);
            start += self.segment(*id).map_or(0, MotifSegment::len);
            if let Some(gap) = inner_gaps.get(k) {
                start += gap;
            }
        }
        placements
    }
}

fn remark_value<'a>(line: &'a str, header: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(header)?;
    Some(rest.strip_prefix(':').unwrap_or(rest).trim())
}

fn parse_placement(value: &str, line: usize) -> Result<Vec<PlacementToken>, StructureError> {
    value
        .split(';')
        .map(str::trim)
        .map(|token| {
            if let Ok(n) = token.parse::<usize>() {
                Ok(PlacementToken::Gap(n))
            } else {
                let mut chars = token.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c.is_ascii_alphanumeric() => Ok(PlacementToken::Segment(c)),
                    _ => Err(StructureError::Format {
                        line,
                        message: format!("bad placement token `{token}`"),
                    }),
                }
            }
        })
        .collect()
}

struct ResidueBuilder {
    number: i32,
    res_name: String,
    atoms: Vec<AtomRecord>,
}

struct SegmentBuilder {
    id: char,
    residues: Vec<ResidueBuilder>,
}

/// Parse a motif specification PDB.
pub fn parse_motif_spec(text: &str) -> Result<MotifSpec, StructureError> {
    let mut pdb_id = None;
    let mut placement = None;
    let mut length = None;
    let mut segments: Vec<SegmentBuilder> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if let Some(value) = remark_value(line, REMARK_ID) {
            pdb_id = Some(value.to_string());
        } else if let Some(value) = remark_value(line, REMARK_PLACEMENT) {
            placement = Some(parse_placement(value, line_no)?);
        } else if let Some(value) = remark_value(line, REMARK_LENGTH) {
            length = Some(value.parse::<usize>().map_err(|_| StructureError::Format {
                line: line_no,
                message: format!("bad scaffold length `{value}`"),
            })?);
        } else if is_atom_record(line) {
            let atom = parse_atom_line(line, line_no)?;
            push_atom(&mut segments, atom)?;
        }
    }

    let pdb_id = pdb_id.ok_or(StructureError::MissingHeader(REMARK_ID))?;
    let placement = placement.ok_or(StructureError::MissingHeader(REMARK_PLACEMENT))?;
    let length = length.ok_or(StructureError::MissingHeader(REMARK_LENGTH))?;

    let segments = segments
        .into_iter()
        .map(finish_segment)
        .collect::<Result<Vec<_>, _>>()?;
    MotifSpec::new(pdb_id, segments, length, placement)
}

fn push_atom(segments: &mut Vec<SegmentBuilder>, atom: AtomLine) -> Result<(), StructureError> {
    let residue_err = |message: &str| StructureError::Residue {
        chain: atom.chain_id,
        residue: atom.res_seq,
        message: message.to_string(),
    };
    if atom.alt_loc != ' ' {
        return Err(residue_err("alternate locations are not supported"));
    }
    if atom.insertion_code != ' ' {
        return Err(residue_err("insertion codes are not supported"));
    }
    let starts_new = segments.last().is_none_or(|s| s.id != atom.chain_id);
    if starts_new {
        if segments.iter().any(|s| s.id == atom.chain_id) {
            return Err(residue_err("chain is split by another chain"));
        }
        segments.push(SegmentBuilder {
            id: atom.chain_id,
            residues: Vec::new(),
        });
    }
    let segment = segments.last_mut().expect("segment pushed above");
    let same_residue = segment.residues.last().is_some_and(|r| r.number == atom.res_seq);
    if !same_residue {
        segment.residues.push(ResidueBuilder {
            number: atom.res_seq,
            res_name: atom.res_name.clone(),
            atoms: Vec::new(),
        });
    }
    let residue = segment.residues.last_mut().expect("residue pushed above");
    if residue.res_name != atom.res_name {
        return Err(residue_err("residue name changes within a residue"));
    }
    if residue.atoms.iter().any(|a| a.name == atom.name) {
        return Err(residue_err(&format!("duplicate atom {}", atom.name)));
    }
    residue.atoms.push(AtomRecord {
        name: atom.name,
        coords: atom.coords,
        residue_index: atom.res_seq,
        chain_id: atom.chain_id,
        element: atom.element,
    });
    Ok(())
}

fn finish_segment(builder: SegmentBuilder) -> Result<MotifSegment, StructureError> {
    let mut residues = Vec::with_capacity(builder.residues.len());
    for (pos, residue) in builder.residues.into_iter().enumerate() {
        let expected = pos as i32 + 1;
        if residue.number != expected {
            return Err(StructureError::Residue {
                chain: builder.id,
                residue: residue.number,
                message: format!("residue numbering must be contiguous from 1 (expected {expected})"),
            });
        }
        let redesignable = residue.res_name == UNKNOWN_RESIDUE;
        let atoms = if redesignable {
            residue
                .atoms
                .into_iter()
                .filter(|a| matches!(a.name.as_str(), "N" | "CA" | "C" | "O"))
                .collect()
        } else {
            residue.atoms
        };
        residues.push(MotifResidue {
            res_name: residue.res_name,
            redesignable,
            atoms,
        });
    }
    Ok(MotifSegment {
        id: builder.id,
        residues,
    })
}

pub fn read_motif_spec(path: impl AsRef<Path>) -> Result<MotifSpec, StructureError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| StructureError::io(path, e))?;
    parse_motif_spec(&text).map_err(|e| StructureError::in_file(path, e))
}

/// Render a motif specification in the benchmark PDB layout.
///
/// Redesignable residues are written as UNK with backbone atoms only, which
/// is the only way the format can express them.
pub fn write_motif_spec(spec: &MotifSpec) -> String {
    let mut out = String::new();
    let placement: Vec<String> = spec.reference_placement.iter().map(ToString::to_string).collect();
    out.push_str(&format!("{REMARK_ID}: {}\n", spec.reference_pdb_id));
    out.push_str(&format!("{REMARK_PLACEMENT}: {}\n", placement.join(";")));
    out.push_str(&format!("{REMARK_LENGTH}: {}\n", spec.scaffold_length));
    let mut serial = 1;
    for segment in &spec.segments {
        for (pos, residue) in segment.residues.iter().enumerate() {
            let res_name = if residue.redesignable {
                UNKNOWN_RESIDUE
            } else {
                residue.res_name.as_str()
            };
            for atom in &residue.atoms {
                if residue.redesignable && !matches!(atom.name.as_str(), "N" | "CA" | "C" | "O") {
                    continue;
                }
                out.push_str(&format_atom_line(
                    serial,
                    &atom.name,
                    res_name,
                    segment.id,
                    pos as i32 + 1,
                    &atom.coords,
                    &atom.element,
                ));
                out.push('\n');
                serial += 1;
            }
        }
        out.push_str("TER\n");
    }
    out.push_str("END   \n");
    out
}
