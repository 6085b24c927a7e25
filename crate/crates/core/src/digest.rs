// SPDX-License-Identifier: Apache-2.0

//! Content digests over canonical JSON.
//!
//! Struct fields serialize in declaration order and maps are `BTreeMap`s, so
//! equal values always produce equal bytes. Floats are written in shortest
//! round-trip form, so any change in a coordinate changes the digest.

use serde::Serialize;
use sha2::{Digest, Sha256};

fn hasher(stage: &str, value: &(impl Serialize + ?Sized)) -> Sha256 {
    let mut hasher = Sha256::new();
    hasher.update(stage.as_bytes());
    hasher.update([0u8]);
    hasher.update(serde_json::to_vec(value).expect("digest inputs serialize to JSON"));
    hasher
}

/// Hex SHA-256 of `stage` and the canonical encoding of `value`.
pub fn content_digest(stage: &str, value: &(impl Serialize + ?Sized)) -> String {
    hex::encode(hasher(stage, value).finalize())
}

/// First eight digest bytes, for seeding RNGs.
pub fn digest_u64(stage: &str, value: &(impl Serialize + ?Sized)) -> u64 {
    let bytes = hasher(stage, value).finalize();
    u64::from_le_bytes(bytes[..8].try_into().expect("digest has 32 bytes"))
}
