// SPDX-License-Identifier: Apache-2.0

//! Evaluation harness for protein motif-scaffolding methods.
//!
//! A benchmark problem is a motif (backbone coordinates of one or more
//! sequence-contiguous segments, some with fixed amino-acid types) plus a
//! required scaffold length. A method answers with 100 single-chain
//! scaffolds. Each scaffold is redesigned into eight sequences, each sequence
//! is refolded, and the scaffold counts as a success when one refolded
//! sequence reproduces both the motif (motifRMSD < 1 Å over N/CA/C) and the
//! whole backbone (scRMSD < 2 Å over CA). Successes are clustered into unique
//! solutions, scored for novelty against a reference database, and rolled up
//! into the MotifBench score.
//!
//! Module map:
//!
//! - [`structure_io`]: motif specification and scaffold PDB formats.
//! - [`geometry`]: Kabsch superposition and the two RMSD measures.
//! - [`backends`]: sequence design, folding, clustering and search behind
//!   pluggable mock, recorded and external-process implementations.
//! - [`metrics`]: per-scaffold success tests, per-case aggregation, score.
//! - [`harness`]: run configuration, caching, replicates and reports.
//! - [`synthetic`]: deterministic construction of test scaffolds.

pub mod backends;
pub mod digest;
pub mod geometry;
pub mod harness;
pub mod metrics;
pub mod structure_io;
pub mod synthetic;

/// Cartesian coordinate in Ångström.
pub type Vec3 = nalgebra::Vector3<f64>;

/// Scaffolds per submitted set.
pub const SCAFFOLDS_PER_SET: usize = 100;
