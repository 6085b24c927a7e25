// SPDX-License-Identifier: Apache-2.0

//! Record backend answers once, replay them by content digest.
//!
//! A fixture is a JSON document with one map per stage. Keys are digests of
//! the full request content, so replay is exact and any change in the
//! request (a coordinate, a seed, a fixed position) misses loudly with
//! [`BackendError::MissingRecording`] instead of returning stale data.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex, PoisonError};

use serde::{Deserialize, Serialize};

use super::{
    BackendError, CaTrace, FoldRequest, FoldResult, SequenceDesignRequest, SequenceDesignResult, SequenceDesigner,
    StructureClusterer, StructurePredictor, StructureSearcher,
};
use crate::digest::content_digest;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordedFixture {
    #[serde(default)]
    pub design: BTreeMap<String, SequenceDesignResult>,
    #[serde(default)]
    pub fold: BTreeMap<String, FoldResult>,
    #[serde(default)]
    pub cluster: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default)]
    pub search: BTreeMap<String, f64>,
}

impl RecordedFixture {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Configuration(format!("cannot read fixture {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| BackendError::Configuration(format!("malformed fixture {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let text = serde_json::to_string_pretty(self).expect("fixture serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn design_key(request: &SequenceDesignRequest) -> String {
        content_digest(
            "design",
            &(
                request.backbone.residues(),
                request.backbone.placements(),
                &request.fixed_positions,
                request.num_sequences,
                request.sampling_temperature,
                request.seed,
            ),
        )
    }

    /// Keyed on the template too: the harness always sends the designed
    /// backbone, and two scaffolds may yield the same sequence.
    pub fn fold_key(request: &FoldRequest) -> String {
        content_digest("fold", &(&request.sequence, &request.template))
    }

    pub fn cluster_key(structures: &[CaTrace]) -> String {
        let traces: Vec<_> = structures.iter().map(|s| &s.ca).collect();
        content_digest("cluster", &traces)
    }

    pub fn search_key(structure: &CaTrace) -> String {
        content_digest("search", &structure.ca)
    }
}

fn lookup<T: Clone>(map: &BTreeMap<String, T>, stage: &str, key: String) -> Result<T, BackendError> {
    map.get(&key).cloned().ok_or(BackendError::MissingRecording {
        stage: stage.into(),
        key,
    })
}

/// Replays a fixture for every role.
#[derive(Debug, Clone)]
pub struct RecordedBackend {
    fixture: Arc<RecordedFixture>,
}

impl RecordedBackend {
    pub fn new(fixture: RecordedFixture) -> Self {
        RecordedBackend {
            fixture: Arc::new(fixture),
        }
    }
}

impl SequenceDesigner for RecordedBackend {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        lookup(&self.fixture.design, "design", RecordedFixture::design_key(request))
    }
}

impl StructurePredictor for RecordedBackend {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        lookup(&self.fixture.fold, "fold", RecordedFixture::fold_key(request))
    }
}

impl StructureClusterer for RecordedBackend {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        lookup(
            &self.fixture.cluster,
            "cluster",
            RecordedFixture::cluster_key(structures),
        )
    }
}

impl StructureSearcher for RecordedBackend {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        lookup(&self.fixture.search, "search", RecordedFixture::search_key(structure))
    }
}

/// Collects answers from wrapped backends into a fixture.
#[derive(Debug, Default)]
pub struct Recorder {
    fixture: Mutex<RecordedFixture>,
}

impl Recorder {
    pub fn new() -> Arc<Self> {
        Arc::new(Recorder::default())
    }

    fn with<R>(&self, f: impl FnOnce(&mut RecordedFixture) -> R) -> R {
        f(&mut self.fixture.lock().unwrap_or_else(PoisonError::into_inner))
    }

    pub fn snapshot(&self) -> RecordedFixture {
        self.with(|f| f.clone())
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        self.snapshot().save(path)
    }
}

pub struct RecordingDesigner {
    pub inner: Arc<dyn SequenceDesigner>,
    pub recorder: Arc<Recorder>,
}

impl SequenceDesigner for RecordingDesigner {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        let result = self.inner.design(request)?;
        let key = RecordedFixture::design_key(request);
        self.recorder.with(|f| f.design.insert(key, result.clone()));
        Ok(result)
    }
}

pub struct RecordingFolder {
    pub inner: Arc<dyn StructurePredictor>,
    pub recorder: Arc<Recorder>,
}

impl StructurePredictor for RecordingFolder {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        let result = self.inner.predict(request)?;
        let key = RecordedFixture::fold_key(request);
        self.recorder.with(|f| f.fold.insert(key, result.clone()));
        Ok(result)
    }
}

pub struct RecordingClusterer {
    pub inner: Arc<dyn StructureClusterer>,
    pub recorder: Arc<Recorder>,
}

impl StructureClusterer for RecordingClusterer {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        let result = self.inner.cluster(structures)?;
        let key = RecordedFixture::cluster_key(structures);
        self.recorder.with(|f| f.cluster.insert(key, result.clone()));
        Ok(result)
    }
}

pub struct RecordingSearcher {
    pub inner: Arc<dyn StructureSearcher>,
    pub recorder: Arc<Recorder>,
}

impl StructureSearcher for RecordingSearcher {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        let result = self.inner.max_tm_score(structure)?;
        let key = RecordedFixture::search_key(structure);
        self.recorder.with(|f| f.search.insert(key, result));
        Ok(result)
    }
}

impl super::Backends {
    /// Wrap every role so its answers land in `recorder`.
    pub fn recording(&self, recorder: &Arc<Recorder>) -> Self {
        super::Backends {
            designer: Arc::new(RecordingDesigner {
                inner: self.designer.clone(),
                recorder: recorder.clone(),
            }),
            designer_ca_only: self.designer_ca_only.clone().map(|inner| {
                Arc::new(RecordingDesigner {
                    inner,
                    recorder: recorder.clone(),
                }) as Arc<dyn SequenceDesigner>
            }),
            folder: Arc::new(RecordingFolder {
                inner: self.folder.clone(),
                recorder: recorder.clone(),
            }),
            clusterer: Arc::new(RecordingClusterer {
                inner: self.clusterer.clone(),
                recorder: recorder.clone(),
            }),
            searcher: Arc::new(RecordingSearcher {
                inner: self.searcher.clone(),
                recorder: recorder.clone(),
            }),
        }
    }

    /// Replay one fixture for every role.
    pub fn replaying(fixture: RecordedFixture) -> Self {
        let backend = Arc::new(RecordedBackend::new(fixture));
        super::Backends {
            designer: backend.clone(),
            designer_ca_only: Some(backend.clone()),
            folder: backend.clone(),
            clusterer: backend.clone(),
            searcher: backend,
        }
    }
}
