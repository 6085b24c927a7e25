// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::external::{ExternalClusterer, ExternalDesigner, ExternalFolder, ExternalSearcher, ExternalTool};
use super::fallback::{SingleLinkageClusterer, DEFAULT_MERGE_THRESHOLD};
use super::mock::{MockDesigner, MockFolder, MockSearcher};
use super::recorded::{RecordedBackend, RecordedFixture};
use super::{BackendError, SequenceDesigner, StructureClusterer, StructurePredictor, StructureSearcher};

pub const DEFAULT_TIMEOUT_SECONDS: u64 = 600;

fn default_timeout() -> u64 {
    DEFAULT_TIMEOUT_SECONDS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Mock,
    Recorded,
    External,
}

/// How to reach one backend. Fields that do not apply to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    /// Executable followed by its arguments.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub command: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub working_dir: Option<PathBuf>,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub env: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixture_path: Option<PathBuf>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
    /// Reference database for structure search.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub database: Option<PathBuf>,
    /// Mock search: answer every query with this TM-score.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_tm: Option<f64>,
    /// Mock clustering: TM-score at or above which two structures merge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub merge_threshold: Option<f64>,
    /// Upper bound on concurrent calls (GPU-bound tools usually want 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_workers: Option<usize>,
}

impl BackendDescriptor {
    fn of_kind(kind: BackendKind) -> Self {
        BackendDescriptor {
            kind,
            command: Vec::new(),
            working_dir: None,
            timeout_seconds: DEFAULT_TIMEOUT_SECONDS,
            env: BTreeMap::new(),
            fixture_path: None,
            noise_sigma: 0.0,
            seed: 0,
            database: None,
            constant_tm: None,
            merge_threshold: None,
            max_workers: None,
        }
    }

    pub fn mock() -> Self {
        Self::of_kind(BackendKind::Mock)
    }

    pub fn recorded(fixture_path: impl Into<PathBuf>) -> Self {
        BackendDescriptor {
            fixture_path: Some(fixture_path.into()),
            ..Self::of_kind(BackendKind::Recorded)
        }
    }

    pub fn external<S: Into<String>>(command: impl IntoIterator<Item = S>) -> Self {
        BackendDescriptor {
            command: command.into_iter().map(Into::into).collect(),
            ..Self::of_kind(BackendKind::External)
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    pub fn with_constant_tm(mut self, tm: f64) -> Self {
        self.constant_tm = Some(tm);
        self
    }

    pub fn with_database(mut self, database: impl Into<PathBuf>) -> Self {
        self.database = Some(database.into());
        self
    }

    fn recorded_backend(&self) -> Result<RecordedBackend, BackendError> {
        let path = self
            .fixture_path
            .as_ref()
            .ok_or_else(|| BackendError::Configuration("recorded backend needs fixture_path".into()))?;
        Ok(RecordedBackend::new(RecordedFixture::load(path)?))
    }

    fn external_tool(&self, role: &'static str) -> Result<ExternalTool, BackendError> {
        let program = self
            .command
            .first()
            .ok_or_else(|| BackendError::Configuration(format!("external {role} needs a command")))?;
        let resolved = resolve_executable(program, self.working_dir.as_deref())
            .ok_or_else(|| BackendError::Configuration(format!("external {role}: executable `{program}` not found")))?;
        if let Some(dir) = &self.working_dir {
            if !dir.is_dir() {
                return Err(BackendError::Configuration(format!(
                    "external {role}: working_dir {} does not exist",
                    dir.display()
                )));
            }
        }
        let mut command = self.command.clone();
        command[0] = resolved.to_string_lossy().into_owned();
        Ok(ExternalTool {
            role,
            command,
            working_dir: self.working_dir.clone(),
            timeout: Duration::from_secs(self.timeout_seconds),
            env: self.env.clone(),
        })
    }

    pub fn build_designer(&self) -> Result<Arc<dyn SequenceDesigner>, BackendError> {
        Ok(match self.kind {
            BackendKind::Mock => Arc::new(MockDesigner),
            BackendKind::Recorded => Arc::new(self.recorded_backend()?),
            BackendKind::External => Arc::new(ExternalDesigner(self.external_tool("designer")?)),
        })
    }

    pub fn build_folder(&self) -> Result<Arc<dyn StructurePredictor>, BackendError> {
        Ok(match self.kind {
            BackendKind::Mock => Arc::new(MockFolder::new(self.noise_sigma, self.seed)?),
            BackendKind::Recorded => Arc::new(self.recorded_backend()?),
            BackendKind::External => Arc::new(ExternalFolder(self.external_tool("folder")?)),
        })
    }

    pub fn build_clusterer(&self) -> Result<Arc<dyn StructureClusterer>, BackendError> {
        Ok(match self.kind {
            BackendKind::Mock => Arc::new(SingleLinkageClusterer::new(
                self.merge_threshold.unwrap_or(DEFAULT_MERGE_THRESHOLD),
            )?),
            BackendKind::Recorded => Arc::new(self.recorded_backend()?),
            BackendKind::External => Arc::new(ExternalClusterer(self.external_tool("clusterer")?)),
        })
    }

    pub fn build_searcher(&self) -> Result<Arc<dyn StructureSearcher>, BackendError> {
        Ok(match self.kind {
            BackendKind::Mock => Arc::new(match (self.constant_tm, &self.database) {
                (Some(tm), _) => MockSearcher::constant(tm)?,
                (None, Some(db)) => MockSearcher::from_database(db)?,
                (None, None) => {
                    return Err(BackendError::Configuration(
                        "mock searcher needs constant_tm or database".into(),
                    ))
                }
            }),
            BackendKind::Recorded => Arc::new(self.recorded_backend()?),
            BackendKind::External => {
                let database = self
                    .database
                    .clone()
                    .ok_or_else(|| BackendError::Configuration("external searcher needs a database".into()))?;
                if !database.exists() {
                    return Err(BackendError::Configuration(format!(
                        "search database {} does not exist",
                        database.display()
                    )));
                }
                Arc::new(ExternalSearcher {
                    tool: self.external_tool("searcher")?,
                    database,
                })
            }
        })
    }

    fn resolve_paths(&mut self, base: &Path) {
        let paths = [
            self.working_dir.as_mut(),
            self.fixture_path.as_mut(),
            self.database.as_mut(),
        ];
        for p in paths.into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(program) = self.command.first_mut() {
            if program.contains('/') && Path::new(program.as_str()).is_relative() {
                *program = base.join(program.as_str()).to_string_lossy().into_owned();
            }
        }
    }
}

fn resolve_executable(program: &str, working_dir: Option<&Path>) -> Option<PathBuf> {
    let path = Path::new(program);
    if program.contains('/') {
        let candidate = match working_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path.to_path_buf(),
        };
        return candidate.is_file().then_some(candidate);
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|dir| dir.join(program))
            .find(|candidate| candidate.is_file())
    })
}

/// One descriptor per pipeline role, read from TOML:
///
/// ```toml
/// [designer]
/// kind = "external"
/// command = ["python", "shims/design.py"]
///
/// [folder]
/// kind = "mock"
/// noise_sigma = 0.1
/// seed = 7
///
/// [searcher]
/// kind = "mock"
/// constant_tm = 0.8
/// ```
///
/// Without a `[clusterer]` table the internal single-linkage clusterer is
/// used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendConfig {
    pub designer: BackendDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub designer_ca_only: Option<BackendDescriptor>,
    pub folder: BackendDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clusterer: Option<BackendDescriptor>,
    pub searcher: BackendDescriptor,
}

impl BackendConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, BackendError> {
        toml::from_str(text).map_err(|e| BackendError::Configuration(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Configuration(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.descriptors_mut().for_each(|d| d.resolve_paths(base));
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("backend config serializes")
    }

    pub fn descriptors(&self) -> impl Iterator<Item = &BackendDescriptor> {
        [
            Some(&self.designer),
            self.designer_ca_only.as_ref(),
            Some(&self.folder),
            self.clusterer.as_ref(),
            Some(&self.searcher),
        ]
        .into_iter()
        .flatten()
    }

    fn descriptors_mut(&mut self) -> impl Iterator<Item = &mut BackendDescriptor> {
        [
            Some(&mut self.designer),
            self.designer_ca_only.as_mut(),
            Some(&mut self.folder),
            self.clusterer.as_mut(),
            Some(&mut self.searcher),
        ]
        .into_iter()
        .flatten()
    }

    /// Smallest `max_workers` across roles, if any role sets one.
    pub fn worker_cap(&self) -> Option<usize> {
        self.descriptors().filter_map(|d| d.max_workers).min()
    }

    /// All-mock configuration: identity fold with optional noise, constant search.
    pub fn mock(noise_sigma: f64, seed: u64, constant_tm: f64) -> Self {
        BackendConfig {
            designer: BackendDescriptor::mock(),
            designer_ca_only: None,
            folder: BackendDescriptor::mock().with_noise(noise_sigma, seed),
            clusterer: None,
            searcher: BackendDescriptor::mock().with_constant_tm(constant_tm),
        }
    }
}
