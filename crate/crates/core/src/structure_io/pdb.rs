// SPDX-License-Identifier: Apache-2.0

//! Fixed-column ATOM record handling.

use serde::{Deserialize, Serialize};

use super::StructureError;
use crate::Vec3;

/// A single ATOM record as kept in memory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub name: String,
    pub coords: Vec3,
    /// 1-based residue number within the chain.
    pub residue_index: i32,
    pub chain_id: char,
    pub element: String,
}

/// Everything read off one ATOM line.
#[derive(Debug, Clone)]
pub(crate) struct AtomLine {
    pub name: String,
    pub alt_loc: char,
    pub res_name: String,
    pub chain_id: char,
    pub res_seq: i32,
    pub insertion_code: char,
    pub coords: Vec3,
    pub element: String,
}

fn column(line: &str, start: usize, end: usize) -> &str {
    let end = end.min(line.len());
    if start >= end {
        ""
    } else {
        &line[start..end]
    }
}

fn char_at(line: &str, idx: usize) -> char {
    line.as_bytes().get(idx).map(|&b| b as char).unwrap_or(' ')
}

/// Parse an `ATOM`/`HETATM` line using the standard PDB column layout.
pub(crate) fn parse_atom_line(line: &str, line_no: usize) -> Result<AtomLine, StructureError> {
    let err = |message: String| StructureError::Format { line: line_no, message };
    if !line.is_ascii() {
        return Err(err("non-ASCII characters in ATOM record".into()));
    }
    if line.len() < 54 {
        return Err(err(format!(
            "ATOM record too short ({} columns, need at least 54)",
            line.len()
        )));
    }
    let name = column(line, 12, 16).trim().to_string();
    if name.is_empty() {
        return Err(err("empty atom name".into()));
    }
    let res_seq = column(line, 22, 26)
        .trim()
        .parse::<i32>()
        .map_err(|_| err(format!("bad residue number `{}`", column(line, 22, 26))))?;
    let mut xyz = [0.0; 3];
    for (k, value) in xyz.iter_mut().enumerate() {
        let field = column(line, 30 + 8 * k, 38 + 8 * k).trim();
        *value = field
            .parse::<f64>()
            .map_err(|_| err(format!("bad coordinate `{field}`")))?;
    }
    if xyz.iter().any(|v| !v.is_finite()) {
        return Err(StructureError::NonFinite { line: line_no });
    }
    let mut element = column(line, 76, 78).trim().to_string();
    if element.is_empty() {
        element = name
            .chars()
            .find(|c| c.is_ascii_alphabetic())
            .map(String::from)
            .unwrap_or_default();
    }
    Ok(AtomLine {
        name,
        alt_loc: char_at(line, 16),
        res_name: column(line, 17, 20).trim().to_string(),
        chain_id: char_at(line, 21),
        res_seq,
        insertion_code: char_at(line, 26),
        coords: Vec3::new(xyz[0], xyz[1], xyz[2]),
        element,
    })
}

pub(crate) fn is_atom_record(line: &str) -> bool {
    line.starts_with("ATOM  ") || line.starts_with("HETATM")
}

/// Atom names shorter than four characters start in column 14.
fn padded_atom_name(name: &str) -> String {
    if name.len() >= 4 {
        name[..4].to_string()
    } else {
        format!(" {name:<3}")
    }
}

/// Render an 80-column ATOM record (occupancy 1.00, B-factor 0.00).
pub(crate) fn format_atom_line(
    serial: usize,
    name: &str,
    res_name: &str,
    chain_id: char,
    res_seq: i32,
    coords: &Vec3,
    element: &str,
) -> String {
    format!(
        "ATOM  {serial:>5} {name} {res_name:>3} {chain_id}{res_seq:>4}    {x:>8.3}{y:>8.3}{z:>8.3}{occ:>6.2}{b:>6.2}          {element:>2}  ",
        name = padded_atom_name(name),
        x = coords.x,
        y = coords.y,
        z = coords.z,
        occ = 1.0,
        b = 0.0,
    )
}
