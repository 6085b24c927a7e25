// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pdb::{format_atom_line, is_atom_record, parse_atom_line};
use super::{MotifSpec, StructureError};
use crate::{Vec3, SCAFFOLDS_PER_SET};

/// Start index (1-based scaffold position) of each motif segment.
pub type Placements = BTreeMap<char, usize>;

/// Name of the placement table expected next to the scaffold PDB files.
pub const PLACEMENT_TABLE_FILE: &str = "motif_placements.tsv";

/// Backbone of one residue. CA is mandatory, the rest may be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackboneResidue {
    pub res_name: String,
    pub n: Option<Vec3>,
    pub ca: Vec3,
    pub c: Option<Vec3>,
    pub o: Option<Vec3>,
}

impl BackboneResidue {
    pub fn ca_only(res_name: impl Into<String>, ca: Vec3) -> Self {
        BackboneResidue {
            res_name: res_name.into(),
            n: None,
            ca,
            c: None,
            o: None,
        }
    }

    pub fn has_full_backbone(&self) -> bool {
        self.n.is_some() && self.c.is_some() && self.o.is_some()
    }

    pub fn atom(&self, name: &str) -> Option<Vec3> {
        match name {
            "N" => self.n,
            "CA" => Some(self.ca),
            "C" => self.c,
            "O" => self.o,
            _ => None,
        }
    }

    fn atoms(&self) -> impl Iterator<Item = (&'static str, Vec3)> + '_ {
        ["N", "CA", "C", "O"]
            .into_iter()
            .filter_map(|name| self.atom(name).map(|xyz| (name, xyz)))
    }
}

/// One designed scaffold with its motif placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldRecord {
    index: usize,
    name: String,
    residues: Vec<BackboneResidue>,
    placements: Placements,
    ca_only: bool,
}

impl ScaffoldRecord {
    /// Validate a scaffold against the problem it answers.
    pub fn new(
        index: usize,
        name: impl Into<String>,
        residues: Vec<BackboneResidue>,
        placements: Placements,
        spec: &MotifSpec,
    ) -> Result<Self, StructureError> {
        let name = name.into();
        if residues.len() != spec.scaffold_length() {
            return Err(StructureError::LengthMismatch {
                expected: spec.scaffold_length(),
                offenders: vec![name],
            });
        }
        check_placements(&name, &placements, spec, residues.len())?;
        let ca_only = !residues.iter().all(BackboneResidue::has_full_backbone);
        Ok(ScaffoldRecord {
            index,
            name,
            residues,
            placements,
            ca_only,
        })
    }

    /// 1-based position within the scaffold set.
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn residues(&self) -> &[BackboneResidue] {
        &self.residues
    }

    pub fn placements(&self) -> &Placements {
        &self.placements
    }

    /// True when any residue lacks N, C or O.
    pub fn is_ca_only(&self) -> bool {
        self.ca_only
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn ca_trace(&self) -> Vec<Vec3> {
        self.residues.iter().map(|r| r.ca).collect()
    }
}

fn check_placements(
    scaffold: &str,
    placements: &Placements,
    spec: &MotifSpec,
    length: usize,
) -> Result<(), StructureError> {
    let err = |message: String| StructureError::Placement {
        scaffold: scaffold.to_string(),
        message,
    };
    for id in placements.keys() {
        if spec.segment(*id).is_none() {
            return Err(err(format!("unknown segment {id}")));
        }
    }
    let mut spans = Vec::with_capacity(spec.segments().len());
    for segment in spec.segments() {
        let start = *placements
            .get(&segment.id)
            .ok_or_else(|| err(format!("segment {} has no placement", segment.id)))?;
        let end = start + segment.len() - 1;
        if start == 0 || end > length {
            return Err(err(format!(
                "segment {} at {start}..={end} is outside 1..={length}",
                segment.id
            )));
        }
        spans.push((start, end, segment.id));
    }
    spans.sort_unstable();
    for pair in spans.windows(2) {
        let (_, first_end, a) = pair[0];
        let (second_start, _, b) = pair[1];
        if second_start <= first_end {
            return Err(err(format!("segments {a} and {b} overlap")));
        }
    }
    Ok(())
}

/// A method's answer to one problem: exactly [`SCAFFOLDS_PER_SET`] scaffolds
/// of a common length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldSet {
    problem_id: String,
    scaffolds: Vec<ScaffoldRecord>,
}

impl ScaffoldSet {
    pub fn new(problem_id: impl Into<String>, scaffolds: Vec<ScaffoldRecord>) -> Result<Self, StructureError> {
        if scaffolds.len() != SCAFFOLDS_PER_SET {
            return Err(StructureError::SetSize {
                expected: SCAFFOLDS_PER_SET,
                found: scaffolds.len(),
            });
        }
        let expected = scaffolds[0].len();
        let offenders: Vec<String> = scaffolds
            .iter()
            .filter(|s| s.len() != expected)
            .map(|s| s.name.clone())
            .collect();
        if !offenders.is_empty() {
            return Err(StructureError::LengthMismatch { expected, offenders });
        }
        Ok(ScaffoldSet {
            problem_id: problem_id.into(),
            scaffolds,
        })
    }

    pub fn problem_id(&self) -> &str {
        &self.problem_id
    }

    pub fn scaffolds(&self) -> &[ScaffoldRecord] {
        &self.scaffolds
    }

    pub fn len(&self) -> usize {
        self.scaffolds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaffolds.is_empty()
    }
}

/// Parse a single-chain scaffold PDB into per-residue backbone atoms.
///
/// Residues must be numbered 1..L without insertion codes. Side-chain
/// atoms, occupancy and B-factors are ignored; only the first model is read.
pub fn parse_scaffold_pdb(text: &str) -> Result<Vec<BackboneResidue>, StructureError> {
    let mut chain: Option<char> = None;
    let mut residues: Vec<(i32, BackboneResidue, [Option<Vec3>; 4])> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.starts_with("ENDMDL") {
            break;
        }
        if !is_atom_record(line) {
            continue;
        }
        let atom = parse_atom_line(line, line_no)?;
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
        match chain {
            None => chain = Some(atom.chain_id),
            Some(c) if c != atom.chain_id => {
                return Err(StructureError::Format {
                    line: line_no,
                    message: format!("scaffolds must be single-chain (saw {c} and {})", atom.chain_id),
                })
            }
            _ => {}
        }
        if residues.last().is_none_or(|(n, _, _)| *n != atom.res_seq) {
            let expected = residues.len() as i32 + 1;
            if atom.res_seq != expected {
                return Err(residue_err(&format!(
                    "residue numbering must run 1..L (expected {expected})"
                )));
            }
            residues.push((
                atom.res_seq,
                BackboneResidue::ca_only(atom.res_name.clone(), Vec3::zeros()),
                [None; 4],
            ));
        }
        let (_, _, slots) = residues.last_mut().expect("residue pushed above");
        let slot = match atom.name.as_str() {
            "N" => 0,
            "CA" => 1,
            "C" => 2,
            "O" => 3,
            _ => continue,
        };
        if slots[slot].is_some() {
            return Err(residue_err(&format!("duplicate atom {}", atom.name)));
        }
        slots[slot] = Some(atom.coords);
    }
    let chain_id = chain.unwrap_or('A');
    residues
        .into_iter()
        .map(|(number, mut residue, [n, ca, c, o])| {
            residue.ca = ca.ok_or(StructureError::Residue {
                chain: chain_id,
                residue: number,
                message: "missing CA atom".into(),
            })?;
            residue.n = n;
            residue.c = c;
            residue.o = o;
            Ok(residue)
        })
        .collect()
}

/// Render backbone atoms as a single-chain PDB.
pub fn write_backbone_pdb(residues: &[BackboneResidue]) -> String {
    let mut out = String::new();
    let mut serial = 1;
    for (pos, residue) in residues.iter().enumerate() {
        for (name, xyz) in residue.atoms() {
            let element = &name[..1];
            out.push_str(&format_atom_line(
                serial,
                name,
                &residue.res_name,
                'A',
                pos as i32 + 1,
                &xyz,
                element,
            ));
            out.push('\n');
            serial += 1;
        }
    }
    out.push_str("TER\nEND\n");
    out
}

/// Parse the placement table: one row per scaffold file, a tab, then
/// `segment:start` pairs separated by semicolons. Blank lines and `#`
/// comments are skipped.
pub fn parse_placement_table(text: &str) -> Result<Vec<(String, Placements)>, StructureError> {
    let mut rows = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let err = |message: String| StructureError::Format { line: line_no, message };
        let (file, pairs) = line
            .split_once('\t')
            .ok_or_else(|| err("expected `<file>\\t<segment:start;...>`".into()))?;
        let file = file.trim().to_string();
        if file.is_empty() {
            return Err(err("empty file name".into()));
        }
        if !seen.insert(file.clone()) {
            return Err(err(format!("duplicate row for {file}")));
        }
        let mut placements = Placements::new();
        for pair in pairs.trim().split(';').filter(|p| !p.trim().is_empty()) {
            let (segment, start) = pair
                .trim()
                .split_once(':')
                .ok_or_else(|| err(format!("bad placement `{pair}`")))?;
            let mut chars = segment.chars();
            let id = match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(err(format!("bad segment id `{segment}`"))),
            };
            let start = start
                .parse::<usize>()
                .map_err(|_| err(format!("bad start index `{start}`")))?;
            if placements.insert(id, start).is_some() {
                return Err(err(format!("segment {id} placed twice")));
            }
        }
        rows.push((file, placements));
    }
    Ok(rows)
}

pub fn write_placement_table<'a>(rows: impl IntoIterator<Item = (&'a str, &'a Placements)>) -> String {
    let mut out = String::new();
    for (file, placements) in rows {
        let pairs: Vec<String> = placements.iter().map(|(id, start)| format!("{id}:{start}")).collect();
        out.push_str(&format!("{file}\t{}\n", pairs.join(";")));
    }
    out
}

/// Load a scaffold directory given the text of its placement table.
///
/// Scaffold indices follow the row order of the table.
pub fn parse_scaffold_set(dir: &Path, metadata: &str, spec: &MotifSpec) -> Result<ScaffoldSet, StructureError> {
    let mut files: Vec<String> = std::fs::read_dir(dir)
        .map_err(|e| StructureError::io(dir, e))?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.file_name().to_string_lossy().into_owned())
        .filter(|name| name.ends_with(".pdb"))
        .collect();
    files.sort();
    if files.len() != SCAFFOLDS_PER_SET {
        return Err(StructureError::SetSize {
            expected: SCAFFOLDS_PER_SET,
            found: files.len(),
        });
    }
    let rows = parse_placement_table(metadata)?;
    let listed: BTreeSet<&str> = rows.iter().map(|(f, _)| f.as_str()).collect();
    let on_disk: BTreeSet<&str> = files.iter().map(String::as_str).collect();
    if let Some(missing) = on_disk.difference(&listed).next() {
        return Err(StructureError::Placement {
            scaffold: missing.to_string(),
            message: "no row in the placement table".into(),
        });
    }
    if let Some(extra) = listed.difference(&on_disk).next() {
        return Err(StructureError::Placement {
            scaffold: extra.to_string(),
            message: "listed in the placement table but not present".into(),
        });
    }

    let mut parsed = Vec::with_capacity(rows.len());
    for (file, placements) in rows {
        let path = dir.join(&file);
        let text = std::fs::read_to_string(&path).map_err(|e| StructureError::io(&path, e))?;
        let residues = parse_scaffold_pdb(&text).map_err(|e| StructureError::in_file(&path, e))?;
        parsed.push((file, residues, placements));
    }
    let offenders: Vec<String> = parsed
        .iter()
        .filter(|(_, residues, _)| residues.len() != spec.scaffold_length())
        .map(|(file, _, _)| file.clone())
        .collect();
    if !offenders.is_empty() {
        return Err(StructureError::LengthMismatch {
            expected: spec.scaffold_length(),
            offenders,
        });
    }
    let records = parsed
        .into_iter()
        .enumerate()
        .map(|(i, (file, residues, placements))| ScaffoldRecord::new(i + 1, file, residues, placements, spec))
        .collect::<Result<Vec<_>, _>>()?;
    let problem_id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    ScaffoldSet::new(problem_id, records)
}

/// Load a scaffold directory whose placement table sits alongside the PDBs.
pub fn read_scaffold_set(dir: &Path, spec: &MotifSpec) -> Result<ScaffoldSet, StructureError> {
    let table = dir.join(PLACEMENT_TABLE_FILE);
    let metadata = std::fs::read_to_string(&table).map_err(|e| StructureError::io(&table, e))?;
    parse_scaffold_set(dir, &metadata, spec)
}

/// N/CA/C coordinates of every motif position in a structure: segment order
/// (as listed in the motif file, not scaffold order), then residue, then N → CA → C.
pub fn motif_atoms_at(
    residues: &[BackboneResidue],
    placements: &Placements,
    spec: &MotifSpec,
) -> Result<Vec<Vec3>, StructureError> {
    let mut coords = Vec::with_capacity(3 * spec.motif_residue_count());
    for segment in spec.segments() {
        let start = *placements.get(&segment.id).ok_or_else(|| StructureError::Placement {
            scaffold: String::new(),
            message: format!("segment {} has no placement", segment.id),
        })?;
        for offset in 0..segment.len() {
            let position = start + offset;
            let residue =
                position
                    .checked_sub(1)
                    .and_then(|i| residues.get(i))
                    .ok_or_else(|| StructureError::Placement {
                        scaffold: String::new(),
                        message: format!("position {position} is outside the structure"),
                    })?;
            for name in ["N", "CA", "C"] {
                let xyz = residue.atom(name).ok_or_else(|| StructureError::Residue {
                    chain: segment.id,
                    residue: position as i32,
                    message: format!("missing backbone atom {name}"),
                })?;
                coords.push(xyz);
            }
        }
    }
    Ok(coords)
}

/// Motif N/CA/C coordinates taken from a designed scaffold.
pub fn extract_motif_atoms(scaffold: &ScaffoldRecord, spec: &MotifSpec) -> Result<Vec<Vec3>, StructureError> {
    if scaffold.is_ca_only() {
        return Err(StructureError::CaOnly(scaffold.name.clone()));
    }
    motif_atoms_at(&scaffold.residues, &scaffold.placements, spec)
}
