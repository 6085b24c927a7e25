// SPDX-License-Identifier: Apache-2.0

//! Shared helpers for the integration tests: reference tables, an
//! SVD-free superposition oracle and on-disk mock workspaces.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use motifbench::backends::BackendConfig;
use motifbench::structure_io::{read_motif_spec, MotifSpec, ScaffoldRecord};
use motifbench::synthetic;
use motifbench::Vec3;
use nalgebra::{Rotation3, Unit};
use rand::Rng;
use tempfile::TempDir;

pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn motifs_dir() -> PathBuf {
    fixtures_dir().join("motifs")
}

pub fn motif(key: &str) -> MotifSpec {
    read_motif_spec(motifs_dir().join(format!("{key}.pdb"))).unwrap()
}

/// Benchmark problem table: case, PDB id, group, scaffold length, motif
/// residues, redesignable residues.
pub const PROBLEMS: [(u32, &str, u8, usize, &str, &str); 30] = [
    (1, "1LDB", 1, 125, "A186-206", ""),
    (2, "1ITU", 1, 150, "A124-147", ""),
    (3, "2CGA", 1, 125, "A184-194", ""),
    (4, "5WN9", 1, 75, "A170-189", "A170-175;A188-189"),
    (5, "5ZE9", 1, 100, "A229-243", ""),
    (6, "6E6R", 1, 75, "A25-35", "A25-35"),
    (7, "6E6R", 1, 200, "A25-35", "A25-35"),
    (8, "7AD5", 1, 125, "A99-113", ""),
    (9, "7CG5", 1, 125, "A6-20", ""),
    (10, "7WRK", 1, 125, "A80-94", ""),
    (11, "3TQB", 2, 125, "A37-51;A65-79", ""),
    (12, "4JHW", 2, 100, "F63-69;F196-212", "F63;F69;F196;F198;F203;F211-212"),
    (13, "4JHW", 2, 200, "F63-69;F196-212", "F63;F69;F196;F198;F203;F211-212"),
    (
        14,
        "5IUS",
        2,
        100,
        "A63-82;A119-140",
        "A63;A65;A67;A69;A71-72;A76;A79-80;A82;A119-123;A125;A127;A129-130;A133;A135;A137-138;A140",
    ),
    (15, "7A8S", 2, 100, "A41-55;A72-86", ""),
    (16, "7BNY", 2, 125, "A83-97;A111-125", ""),
    (17, "7DGW", 2, 125, "A22-36;A70-84", ""),
    (18, "7MQQ", 2, 100, "A80-94;A115-129", ""),
    (19, "7MQQ", 2, 200, "A80-94;A115-129", ""),
    (20, "7UWL", 2, 175, "E63-73;E101-111", "E63-73;E101-103;E105-111"),
    (21, "1B73", 3, 125, "A7-8;A70;A178-180", "A179"),
    (
        22,
        "1BCF",
        3,
        125,
        "A18-25;A47-54;A92-99;A123-130",
        "A19-25;A47-50;A52-53;A92-93;A95-99;A123-126;A128-129",
    ),
    (23, "1MPY", 3, 125, "A153;A199;A214;A246;A255;A265", ""),
    (24, "1QY3", 3, 225, "A58-71;A96;A222", "A58-61;A63-64;A68-71"),
    (
        25,
        "2RKX",
        3,
        225,
        "A9-11;A48-50;A101;A128;A169;A176;A201;A222-224",
        "A10;A49;A223",
    ),
    (
        26,
        "3B5V",
        3,
        200,
        "A51-53;A81;A110;A131;A159;A180-184;A210-211;A231-233",
        "A52;A181;A183;A232",
    ),
    (27, "4XOJ", 3, 150, "A55;A99;A190-192", "A191"),
    (28, "5YUI", 3, 75, "A93-97;A118-120;A198-200", "A93;A95;A97;A118;A120"),
    (29, "6CPA", 3, 200, "A69-72;A127;A196;A248;A270", "A70-71"),
    (
        30,
        "7UWL",
        3,
        175,
        "E63-73;E101-111;E132-142;E165-174",
        "E63-73;E101-103;E105-111;E132-142;E165-174",
    ),
];

pub fn problem_key(case: u32, pdb_id: &str) -> String {
    format!("{case:02}_{pdb_id}")
}

/// `A7-8;A70` → `[(A, 7, 8), (A, 70, 70)]`.
pub fn residue_ranges(text: &str) -> Vec<(char, i32, i32)> {
    text.split(';')
        .filter(|t| !t.is_empty())
        .map(|token| {
            let chain = token.chars().next().unwrap();
            let body = &token[1..];
            let (a, b) = body.split_once('-').unwrap_or((body, body));
            (chain, a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

pub fn range_residue_count(text: &str) -> usize {
    residue_ranges(text).iter().map(|(_, a, b)| (b - a + 1) as usize).sum()
}

// ---------------------------------------------------------------------------
// Superposition oracle

pub fn centered(points: &[Vec3]) -> Vec<Vec3> {
    let c = points.iter().sum::<Vec3>() / points.len() as f64;
    points.iter().map(|p| p - c).collect()
}

/// RMSD after rotating centred `a` by `r` onto centred `b`.
pub fn rmsd_under(r: &Rotation3<f64>, a: &[Vec3], b: &[Vec3]) -> f64 {
    let sum: f64 = a.iter().zip(b).map(|(p, q)| (r * p - q).norm_squared()).sum();
    (sum / a.len() as f64).sqrt()
}

/// Axis-angle grid over SO(3): Fibonacci-sphere axes times evenly spaced
/// angles in [0, π]. Every rotation lies within [`GRID_COVERING_RAD`] of
/// some grid element.
pub fn rotation_grid() -> Vec<Rotation3<f64>> {
    const AXES: usize = 240;
    const ANGLES: usize = 30;
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let mut grid = vec![Rotation3::identity()];
    for i in 0..AXES {
        let z = 1.0 - 2.0 * (i as f64 + 0.5) / AXES as f64;
        let r = (1.0 - z * z).sqrt();
        let axis = Unit::new_normalize(Vec3::new(
            r * (golden * i as f64).cos(),
            r * (golden * i as f64).sin(),
            z,
        ));
        for k in 1..=ANGLES {
            let angle = std::f64::consts::PI * k as f64 / ANGLES as f64;
            grid.push(Rotation3::from_axis_angle(&axis, angle));
        }
    }
    grid
}

/// Upper bound on the geodesic distance from any rotation to the grid.
pub const GRID_COVERING_RAD: f64 = 0.3;

pub struct OracleFit {
    /// Best RMSD among grid rotations only.
    pub grid_rmsd: f64,
    /// Grid optimum refined by derivative-free pattern search.
    pub refined_rmsd: f64,
}

/// Brute-force RMSD minimisation over proper rotations; translation is
/// fixed by centring both sets.
pub fn brute_force_rmsd(grid: &[Rotation3<f64>], pred: &[Vec3], design: &[Vec3]) -> OracleFit {
    let a = centered(pred);
    let b = centered(design);
    let mut scored: Vec<(f64, &Rotation3<f64>)> = grid.iter().map(|r| (rmsd_under(r, &a, &b), r)).collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let grid_rmsd = scored[0].0;

    let mut refined_rmsd = f64::INFINITY;
    for &(start, rotation) in scored.iter().take(3) {
        let mut best = *rotation;
        let mut value = start;
        let mut step = 0.2;
        while step > 1e-10 {
            let mut improved = false;
            for axis in [Vec3::x(), Vec3::y(), Vec3::z()] {
                for sign in [1.0, -1.0] {
                    let candidate = Rotation3::from_scaled_axis(axis * (sign * step)) * best;
                    let v = rmsd_under(&candidate, &a, &b);
                    if v < value {
                        value = v;
                        best = candidate;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        refined_rmsd = refined_rmsd.min(value);
    }
    OracleFit {
        grid_rmsd,
        refined_rmsd,
    }
}

pub fn random_points(rng: &mut impl Rng, n: usize, spread: f64) -> Vec<Vec3> {
    (0..n)
        .map(|_| {
            Vec3::new(
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
                rng.random_range(-spread..spread),
            )
        })
        .collect()
}

pub fn random_rotation(rng: &mut impl Rng) -> Rotation3<f64> {
    let axis = Vec3::new(
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    );
    let axis = Unit::try_new(axis, 1e-6).unwrap_or(Vec3::z_axis());
    Rotation3::from_axis_angle(&axis, rng.random_range(0.0..std::f64::consts::PI))
}

pub fn rms_radius(points: &[Vec3]) -> f64 {
    let c = centered(points);
    (c.iter().map(|p| p.norm_squared()).sum::<f64>() / c.len() as f64).sqrt()
}

// ---------------------------------------------------------------------------
// On-disk workspaces

/// Motif directory, scaffold directory, backend config and output directory
/// under one temporary root.
pub struct Workspace {
    pub root: TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(root.path().join("motifs")).unwrap();
        std::fs::create_dir_all(root.path().join("scaffolds")).unwrap();
        Workspace { root }
    }

    pub fn motifs(&self) -> PathBuf {
        self.root.path().join("motifs")
    }

    pub fn scaffolds(&self) -> PathBuf {
        self.root.path().join("scaffolds")
    }

    pub fn backends(&self) -> PathBuf {
        self.root.path().join("backends.toml")
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.root.path().join(name)
    }

    /// Copy the bundled motif `key` and write `scaffolds` as its set.
    pub fn add_case(&self, key: &str, scaffolds: &[ScaffoldRecord]) {
        std::fs::copy(
            motifs_dir().join(format!("{key}.pdb")),
            self.motifs().join(format!("{key}.pdb")),
        )
        .unwrap();
        synthetic::write_scaffold_dir(&self.scaffolds().join(key), scaffolds).unwrap();
    }

    pub fn write_backends(&self, config: &BackendConfig) {
        std::fs::write(self.backends(), config.to_toml_string()).unwrap();
    }
}

/// 100 verbatim embeddings of `key`'s motif.
pub fn identical_scaffolds(key: &str) -> Vec<ScaffoldRecord> {
    let spec = motif(key);
    synthetic::identical_set(&spec, &spec.packed_placement()).unwrap()
}

/// 100 scaffolds whose last segment is pulled 3 Å away from the motif centre.
pub fn displaced_scaffolds(key: &str) -> Vec<ScaffoldRecord> {
    let spec = motif(key);
    let last = spec.segments().last().unwrap().id;
    let shift = synthetic::radial_shift(&spec, last, 3.0).unwrap();
    identical_scaffolds(key)
        .iter()
        .map(|s| synthetic::displace_segment(s, &spec, last, shift).unwrap())
        .collect()
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
