// SPDX-License-Identifier: Apache-2.0

//! Wall-time accounting per pipeline stage.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::backends::{
    BackendError, Backends, CaTrace, FoldRequest, FoldResult, SequenceDesignRequest, SequenceDesignResult,
    SequenceDesigner, StructureClusterer, StructurePredictor, StructureSearcher,
};

/// Accumulated nanoseconds per stage. Concurrent calls add up, so the
/// totals measure backend compute, not elapsed time.
#[derive(Debug, Default)]
pub struct StageClock {
    design: AtomicU64,
    fold: AtomicU64,
    cluster: AtomicU64,
    search: AtomicU64,
}

impl StageClock {
    fn time<T>(counter: &AtomicU64, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        counter.fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
        out
    }

    pub fn snapshot(&self, wall_seconds: f64) -> StageTimes {
        let secs = |c: &AtomicU64| c.load(Ordering::Relaxed) as f64 * 1e-9;
        StageTimes {
            design_s: secs(&self.design),
            fold_s: secs(&self.fold),
            cluster_s: secs(&self.cluster),
            search_s: secs(&self.search),
            wall_s: wall_seconds,
        }
    }

    /// Wrap every role so call durations land in this clock.
    pub fn wrap(self: &Arc<Self>, backends: &Backends) -> Backends {
        Backends {
            designer: Arc::new(Timed {
                inner: backends.designer.clone(),
                clock: self.clone(),
            }),
            designer_ca_only: backends.designer_ca_only.clone().map(|inner| {
                Arc::new(Timed {
                    inner,
                    clock: self.clone(),
                }) as Arc<dyn SequenceDesigner>
            }),
            folder: Arc::new(Timed {
                inner: backends.folder.clone(),
                clock: self.clone(),
            }),
            clusterer: Arc::new(Timed {
                inner: backends.clusterer.clone(),
                clock: self.clone(),
            }),
            searcher: Arc::new(Timed {
                inner: backends.searcher.clone(),
                clock: self.clone(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub design_s: f64,
    pub fold_s: f64,
    pub cluster_s: f64,
    pub search_s: f64,
    pub wall_s: f64,
}

impl std::ops::AddAssign for StageTimes {
    fn add_assign(&mut self, other: Self) {
        self.design_s += other.design_s;
        self.fold_s += other.fold_s;
        self.cluster_s += other.cluster_s;
        self.search_s += other.search_s;
        self.wall_s += other.wall_s;
    }
}

/// Compute expense of a run, per case (summed over replicates) and in total.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ComputeLedger {
    pub cases: BTreeMap<String, StageTimes>,
    pub total: StageTimes,
}

impl ComputeLedger {
    pub fn add(&mut self, case: &str, times: StageTimes) {
        *self.cases.entry(case.to_string()).or_default() += times;
        self.total += times;
    }
}

struct Timed<T: ?Sized> {
    inner: Arc<T>,
    clock: Arc<StageClock>,
}

impl SequenceDesigner for Timed<dyn SequenceDesigner> {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        StageClock::time(&self.clock.design, || self.inner.design(request))
    }
}

impl StructurePredictor for Timed<dyn StructurePredictor> {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        StageClock::time(&self.clock.fold, || self.inner.predict(request))
    }
}

impl StructureClusterer for Timed<dyn StructureClusterer> {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        StageClock::time(&self.clock.cluster, || self.inner.cluster(structures))
    }
}

impl StructureSearcher for Timed<dyn StructureSearcher> {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        StageClock::time(&self.clock.search, || self.inner.max_tm_score(structure))
    }
}
