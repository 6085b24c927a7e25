// SPDX-License-Identifier: Apache-2.0

//! Per-stage result cache keyed by content digest.
//!
//! Entries are JSON files at `<root>/<stage>/<key>.json`, written to a
//! temporary file in the same directory and renamed into place, so a reader
//! sees either a complete entry or none, and concurrent writers of the same
//! key are harmless (they write identical bytes).

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::backends::{
    BackendError, Backends, CaTrace, FoldRequest, FoldResult, RecordedFixture, SequenceDesignRequest,
    SequenceDesignResult, SequenceDesigner, StructureClusterer, StructurePredictor, StructureSearcher,
};
use crate::digest::content_digest;

/// Stable digest of `inputs` for `stage`.
pub fn cache_key(stage: &str, inputs: &(impl Serialize + ?Sized)) -> String {
    content_digest(stage, inputs)
}

#[derive(Debug, Clone)]
pub struct Cache {
    root: PathBuf,
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Cache { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.root.join(stage).join(format!("{key}.json"))
    }

    /// Unreadable or malformed entries count as misses.
    pub fn get<T: DeserializeOwned>(&self, stage: &str, key: &str) -> Option<T> {
        let text = std::fs::read_to_string(self.path(stage, key)).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put<T: Serialize>(&self, stage: &str, key: &str, value: &T) -> std::io::Result<()> {
        let path = self.path(stage, key);
        let dir = path.parent().expect("cache entries live in a stage directory");
        std::fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, value)?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }

    fn through<T: Serialize + DeserializeOwned>(
        &self,
        stage: &str,
        key: String,
        compute: impl FnOnce() -> Result<T, BackendError>,
    ) -> Result<T, BackendError> {
        if let Some(hit) = self.get(stage, &key) {
            return Ok(hit);
        }
        let value = compute()?;
        self.put(stage, &key, &value)?;
        Ok(value)
    }

    /// Wrap every role so answers are served from, and saved to, this cache.
    pub fn wrap(self: &Arc<Self>, backends: &Backends) -> Backends {
        Backends {
            designer: Arc::new(Cached {
                inner: backends.designer.clone(),
                cache: self.clone(),
            }),
            designer_ca_only: backends.designer_ca_only.clone().map(|inner| {
                Arc::new(Cached {
                    inner,
                    cache: self.clone(),
                }) as Arc<dyn SequenceDesigner>
            }),
            folder: Arc::new(Cached {
                inner: backends.folder.clone(),
                cache: self.clone(),
            }),
            clusterer: Arc::new(Cached {
                inner: backends.clusterer.clone(),
                cache: self.clone(),
            }),
            searcher: Arc::new(Cached {
                inner: backends.searcher.clone(),
                cache: self.clone(),
            }),
        }
    }
}

struct Cached<T: ?Sized> {
    inner: Arc<T>,
    cache: Arc<Cache>,
}

impl SequenceDesigner for Cached<dyn SequenceDesigner> {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        self.cache.through("design", RecordedFixture::design_key(request), || {
            self.inner.design(request)
        })
    }
}

impl StructurePredictor for Cached<dyn StructurePredictor> {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        self.cache.through("fold", RecordedFixture::fold_key(request), || {
            self.inner.predict(request)
        })
    }
}

impl StructureClusterer for Cached<dyn StructureClusterer> {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        self.cache
            .through("cluster", RecordedFixture::cluster_key(structures), || {
                self.inner.cluster(structures)
            })
    }
}

impl StructureSearcher for Cached<dyn StructureSearcher> {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        self.cache
            .through("search", RecordedFixture::search_key(structure), || {
                self.inner.max_tm_score(structure)
            })
    }
}
