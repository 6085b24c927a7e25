// SPDX-License-Identifier: Apache-2.0

//! External tools behind a scratch-directory protocol.
//!
//! Every call gets a fresh scratch directory. The harness writes the request
//! files there, starts the configured command and sends one control line on
//! its standard input:
//!
//! ```text
//! op=design backbone=<pdb> out=<fasta> num_sequences=8 temperature=0.1 seed=7 ca_only=false fixed=12:H,40:D
//! op=fold sequence=<fasta> out=<pdb>
//! op=cluster structures=<dir> out=<tsv>
//! op=search query=<pdb> database=<path> out=<tsv>
//! ```
//!
//! `seed` is omitted when the run has none. The tool writes its answer to
//! `out` and reports on the last line of standard output, either `status=ok`
//! or `status=error message=<text>`. Values are percent-encoded: `%`, space,
//! `=` and control characters become `%XX`.
//!
//! Answer files:
//!
//! - design: FASTA, one record per sequence, in sampling order.
//! - fold: PDB, single chain, one residue per sequence position.
//! - cluster: `representative<TAB>member` rows naming input file stems.
//! - search: `target<TAB>tm_score` rows; no rows means no hit.
//!
//! A non-zero exit, an error status, a missing answer file or a malformed
//! answer is an error; nothing is retried except the clustering prefilter
//! failure, which is answered once by adding a decoy structure unrelated to
//! the inputs and removing it from the returned clusters.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use tempfile::TempDir;

use super::{
    BackendError, CaTrace, FoldRequest, FoldResult, SequenceDesignRequest, SequenceDesignResult, SequenceDesigner,
    StructureClusterer, StructurePredictor, StructureSearcher,
};
use crate::structure_io::{parse_scaffold_pdb, write_backbone_pdb, BackboneResidue};
use crate::Vec3;

/// Stem of the decoy structure added by the prefilter workaround.
pub const DECOY_NAME: &str = "decoy";
const DIAGNOSTICS_LIMIT: usize = 4000;

/// Single-line `key=value` record exchanged with external tools.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlMessage(Vec<(String, String)>);

impl ControlMessage {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl fmt::Display) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn with_path(self, key: &str, path: &Path) -> Self {
        self.with(key, path.display())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse(line: &str) -> Result<Self, BackendError> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for token in line.split_whitespace() {
            let (key, value) = token
                .split_once('=')
                .ok_or_else(|| BackendError::ProtocolViolation(format!("control token `{token}` lacks `=`")))?;
            if key.is_empty() {
                return Err(BackendError::ProtocolViolation(format!("empty key in `{token}`")));
            }
            if pairs.iter().any(|(k, _)| k == key) {
                return Err(BackendError::ProtocolViolation(format!("duplicate key `{key}`")));
            }
            pairs.push((key.to_string(), percent_decode(value)?));
        }
        Ok(ControlMessage(pairs))
    }
}

impl fmt::Display for ControlMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (key, value)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{key}={}", percent_encode(value))?;
        }
        Ok(())
    }
}

fn percent_encode(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for ch in value.chars() {
        match ch {
            '%' | ' ' | '=' => out.push_str(&format!("%{:02X}", ch as u32)),
            c if c.is_ascii_control() => out.push_str(&format!("%{:02X}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

fn percent_decode(value: &str) -> Result<String, BackendError> {
    let bytes = value.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = value
                .get(i + 1..i + 3)
                .and_then(|h| u8::from_str_radix(h, 16).ok())
                .ok_or_else(|| BackendError::ProtocolViolation(format!("bad escape in `{value}`")))?;
            out.push(hex);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| BackendError::ProtocolViolation(format!("non-UTF-8 value `{value}`")))
}

/// Parse FASTA into `(header, sequence)` records; sequence lines are joined.
pub fn parse_fasta(text: &str) -> Result<Vec<(String, String)>, BackendError> {
    let mut records: Vec<(String, String)> = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(header) = line.strip_prefix('>') {
            records.push((header.trim().to_string(), String::new()));
        } else {
            let (_, sequence) = records
                .last_mut()
                .ok_or_else(|| BackendError::ProtocolViolation("FASTA sequence before the first header".into()))?;
            sequence.extend(line.chars().filter(|c| !c.is_whitespace()));
        }
    }
    Ok(records)
}

pub fn write_fasta<'a>(records: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    records
        .into_iter()
        .map(|(header, sequence)| format!(">{header}\n{sequence}\n"))
        .collect()
}

/// One configured external command.
#[derive(Debug, Clone)]
pub struct ExternalTool {
    pub(crate) role: &'static str,
    pub(crate) command: Vec<String>,
    pub(crate) working_dir: Option<PathBuf>,
    pub(crate) timeout: Duration,
    pub(crate) env: BTreeMap<String, String>,
}

fn read_all(mut stream: impl Read + Send + 'static) -> JoinHandle<Vec<u8>> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stream.read_to_end(&mut buf);
        buf
    })
}

fn tail(text: &str) -> String {
    let text = text.trim();
    match text.char_indices().rev().nth(DIAGNOSTICS_LIMIT) {
        Some((cut, _)) => format!("…{}", &text[cut..]),
        None => text.to_string(),
    }
}

impl ExternalTool {
    pub fn new(role: &'static str, command: Vec<String>, timeout: Duration) -> Self {
        ExternalTool {
            role,
            command,
            working_dir: None,
            timeout,
            env: BTreeMap::new(),
        }
    }

    fn name(&self) -> String {
        let program = self.command.first().map(String::as_str).unwrap_or("");
        let short = Path::new(program)
            .file_name()
            .map_or(program.into(), |f| f.to_string_lossy());
        format!("{} ({short})", self.role)
    }

    fn failure(&self, status: Option<i32>, diagnostics: String) -> BackendError {
        BackendError::Failure {
            tool: self.name(),
            status,
            diagnostics,
        }
    }

    fn scratch(&self) -> Result<TempDir, BackendError> {
        Ok(tempfile::Builder::new().prefix("motifbench-").tempdir()?)
    }

    fn wait(&self, child: &mut Child) -> Result<Option<std::process::ExitStatus>, BackendError> {
        let deadline = Instant::now() + self.timeout;
        let mut pause = Duration::from_millis(1);
        loop {
            if let Some(status) = child.try_wait()? {
                return Ok(Some(status));
            }
            if Instant::now() >= deadline {
                let _ = child.kill();
                let _ = child.wait();
                return Ok(None);
            }
            thread::sleep(pause);
            pause = (pause * 2).min(Duration::from_millis(20));
        }
    }

    /// Start the tool in `scratch`, send `message`, return its reply.
    pub fn invoke(&self, message: &ControlMessage, scratch: &Path) -> Result<ControlMessage, BackendError> {
        let (program, args) = self
            .command
            .split_first()
            .ok_or_else(|| BackendError::Configuration(format!("{} has no command", self.role)))?;
        let mut child = Command::new(program)
            .args(args)
            .current_dir(self.working_dir.as_deref().unwrap_or(scratch))
            .envs(&self.env)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| self.failure(None, format!("cannot start: {e}")))?;
        let stdout = read_all(child.stdout.take().expect("stdout is piped"));
        let stderr = read_all(child.stderr.take().expect("stderr is piped"));
        if let Some(mut stdin) = child.stdin.take() {
            // A tool that exits without reading its input is judged by its exit status.
            let _ = stdin.write_all(format!("{message}\n").as_bytes());
        }
        let Some(status) = self.wait(&mut child)? else {
            return Err(BackendError::Timeout {
                tool: self.name(),
                seconds: self.timeout.as_secs(),
            });
        };
        let stdout = String::from_utf8_lossy(&stdout.join().unwrap_or_default()).into_owned();
        let stderr = String::from_utf8_lossy(&stderr.join().unwrap_or_default()).into_owned();
        if !status.success() {
            return Err(self.failure(status.code(), tail(&stderr)));
        }
        let last = stdout
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| BackendError::ProtocolViolation(format!("{} printed no control reply", self.name())))?;
        let reply = ControlMessage::parse(last)?;
        match reply.get("status") {
            Some("ok") => Ok(reply),
            Some("error") => {
                let message = reply.get("message").unwrap_or("unspecified error");
                Err(self.failure(status.code(), tail(&format!("{message}\n{stderr}"))))
            }
            other => Err(BackendError::ProtocolViolation(format!(
                "{} replied with status {other:?}",
                self.name()
            ))),
        }
    }
}

fn read_answer(path: &Path) -> Result<String, BackendError> {
    std::fs::read_to_string(path)
        .map_err(|e| BackendError::ProtocolViolation(format!("answer file {} unreadable: {e}", path.display())))
}

fn write_trace(path: &Path, ca: &[Vec3]) -> Result<(), BackendError> {
    let residues: Vec<BackboneResidue> = ca.iter().map(|p| BackboneResidue::ca_only("GLY", *p)).collect();
    std::fs::write(path, write_backbone_pdb(&residues))?;
    Ok(())
}

pub struct ExternalDesigner(pub ExternalTool);

impl SequenceDesigner for ExternalDesigner {
    fn design(&self, request: &SequenceDesignRequest) -> Result<SequenceDesignResult, BackendError> {
        let scratch = self.0.scratch()?;
        let backbone = scratch.path().join("backbone.pdb");
        let out = scratch.path().join("sequences.fa");
        std::fs::write(&backbone, write_backbone_pdb(request.backbone.residues()))?;
        let fixed: Vec<String> = request
            .fixed_positions
            .iter()
            .map(|(p, c)| format!("{p}:{c}"))
            .collect();
        let mut message = ControlMessage::new()
            .with("op", "design")
            .with_path("backbone", &backbone)
            .with_path("out", &out)
            .with("num_sequences", request.num_sequences)
            .with("temperature", request.sampling_temperature)
            .with("ca_only", request.ca_only())
            .with("fixed", fixed.join(","));
        if let Some(seed) = request.seed {
            message = message.with("seed", seed);
        }
        self.0.invoke(&message, scratch.path())?;
        let sequences = parse_fasta(&read_answer(&out)?)?
            .into_iter()
            .map(|(_, sequence)| sequence)
            .collect();
        Ok(SequenceDesignResult { sequences })
    }
}

pub struct ExternalFolder(pub ExternalTool);

impl StructurePredictor for ExternalFolder {
    fn predict(&self, request: &FoldRequest) -> Result<FoldResult, BackendError> {
        let scratch = self.0.scratch()?;
        let sequence = scratch.path().join("sequence.fa");
        let out = scratch.path().join("prediction.pdb");
        std::fs::write(&sequence, write_fasta([("query", request.sequence.as_str())]))?;
        let message = ControlMessage::new()
            .with("op", "fold")
            .with_path("sequence", &sequence)
            .with_path("out", &out);
        self.0.invoke(&message, scratch.path())?;
        let residues = parse_scaffold_pdb(&read_answer(&out)?)
            .map_err(|e| BackendError::ProtocolViolation(format!("prediction: {e}")))?;
        Ok(FoldResult { residues })
    }
}

pub struct ExternalClusterer(pub ExternalTool);

fn mentions_prefilter(error: &BackendError) -> bool {
    matches!(error, BackendError::Failure { diagnostics, .. } if diagnostics.to_lowercase().contains("prefilter"))
}

/// Extended zig-zag chain, structurally unrelated to designed scaffolds.
fn decoy_trace() -> Vec<Vec3> {
    (0..60)
        .map(|i| Vec3::new(3.3 * i as f64, if i % 2 == 0 { 0.9 } else { -0.9 }, 0.0))
        .collect()
}

impl ExternalClusterer {
    fn run(&self, structures: &[CaTrace], with_decoy: bool) -> Result<Vec<Vec<usize>>, BackendError> {
        let scratch = self.0.scratch()?;
        let dir = scratch.path().join("structures");
        let out = scratch.path().join("clusters.tsv");
        std::fs::create_dir(&dir)?;
        let mut index_of: BTreeMap<String, Option<usize>> = BTreeMap::new();
        for (i, structure) in structures.iter().enumerate() {
            let stem = format!("s{i:04}");
            write_trace(&dir.join(format!("{stem}.pdb")), &structure.ca)?;
            index_of.insert(stem, Some(i));
        }
        if with_decoy {
            write_trace(&dir.join(format!("{DECOY_NAME}.pdb")), &decoy_trace())?;
            index_of.insert(DECOY_NAME.to_string(), None);
        }
        let message = ControlMessage::new()
            .with("op", "cluster")
            .with_path("structures", &dir)
            .with_path("out", &out);
        self.0.invoke(&message, scratch.path())?;

        let mut order: Vec<String> = Vec::new();
        let mut members: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (n, line) in read_answer(&out)?.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (rep, member) = line.split_once('\t').ok_or_else(|| {
                BackendError::ProtocolViolation(format!("clusters line {}: expected two columns", n + 1))
            })?;
            let lookup = |name: &str| {
                index_of.get(name.trim()).copied().ok_or_else(|| {
                    BackendError::ProtocolViolation(format!("clusters line {}: unknown structure `{name}`", n + 1))
                })
            };
            lookup(rep)?;
            let entry = members.entry(rep.trim().to_string()).or_insert_with(|| {
                order.push(rep.trim().to_string());
                Vec::new()
            });
            if let Some(index) = lookup(member)? {
                entry.push(index);
            }
        }
        Ok(order
            .iter()
            .filter_map(|rep| members.remove(rep))
            .filter(|cluster| !cluster.is_empty())
            .collect())
    }
}

impl StructureClusterer for ExternalClusterer {
    fn cluster(&self, structures: &[CaTrace]) -> Result<Vec<Vec<usize>>, BackendError> {
        match self.run(structures, false) {
            Err(error) if mentions_prefilter(&error) => self.run(structures, true),
            other => other,
        }
    }
}

pub struct ExternalSearcher {
    pub tool: ExternalTool,
    pub database: PathBuf,
}

impl StructureSearcher for ExternalSearcher {
    fn max_tm_score(&self, structure: &CaTrace) -> Result<f64, BackendError> {
        let scratch = self.tool.scratch()?;
        let query = scratch.path().join("query.pdb");
        let out = scratch.path().join("hits.tsv");
        write_trace(&query, &structure.ca)?;
        let message = ControlMessage::new()
            .with("op", "search")
            .with_path("query", &query)
            .with_path("database", &self.database)
            .with_path("out", &out);
        self.tool.invoke(&message, scratch.path())?;
        let mut best = 0.0f64;
        for (n, line) in read_answer(&out)?.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tm = line
                .split('\t')
                .nth(1)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| BackendError::ProtocolViolation(format!("hits line {}: `{line}`", n + 1)))?;
            best = best.max(tm);
        }
        Ok(best)
    }
}
