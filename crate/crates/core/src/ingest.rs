//! Reads follower-ID files, validates them against the manifest, and
//! materializes one [`IdSet`] per entity plus an audited ingest report.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Component, Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::idset::{IdSet, IdSetError, IdStreamParser, MAGIC};
use crate::registry::Registry;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    /// One decimal id per line, LF or CRLF, blank lines skipped.
    Text,
    /// The flat `IDS1` layout.
    Binary,
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// Fatal once the malformed-line fraction strictly exceeds this.
    pub malformed_threshold: f64,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            malformed_threshold: 0.01,
        }
    }
}

/// Per-file ingest audit entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileReport {
    pub raw_count: u64,
    pub distinct_count: u64,
    pub duplicate_count: u64,
    pub malformed_line_count: u64,
    /// `sha256:<hex>` over the exact bytes read.
    pub digest: String,
}

#[derive(Debug, Clone, Default)]
pub struct IngestReport {
    pub per_entity: BTreeMap<String, FileReport>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("missing follower file for {handle:?}: {path}")]
    MissingFile { handle: String, path: PathBuf },
    #[error(
        "{path}: {malformed} of {raw} lines malformed, above the {threshold} fatal threshold"
    )]
    MalformedFractionExceeded {
        path: PathBuf,
        malformed: u64,
        raw: u64,
        threshold: f64,
    },
    #[error("{path}: {source}")]
    Binary {
        path: PathBuf,
        source: IdSetError,
    },
    #[error("digest mismatch for {handle:?}: manifest says {expected}, file is {actual}")]
    DigestMismatch {
        handle: String,
        expected: String,
        actual: String,
    },
    #[error("follower file for {handle:?} escapes the dataset root: {path}")]
    PathEscapesRoot { handle: String, path: PathBuf },
    #[error("snapshot is missing a set for {handle:?}")]
    MissingSet { handle: String },
    #[error("snapshot has a set for unknown handle {handle:?}")]
    UnexpectedSet { handle: String },
}

impl IngestError {
    pub fn code(&self) -> &'static str {
        match self {
            IngestError::Io { .. } => "io",
            IngestError::MissingFile { .. } => "missing_file",
            IngestError::MalformedFractionExceeded { .. } => "malformed_fraction_exceeded",
            IngestError::Binary { .. } => "binary_format",
            IngestError::DigestMismatch { .. } => "digest_mismatch",
            IngestError::PathEscapesRoot { .. } => "path_escapes_root",
            IngestError::MissingSet { .. } => "missing_set",
            IngestError::UnexpectedSet { .. } => "unexpected_set",
        }
    }
}

/// A frozen collection of per-entity follower sets taken at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    registry: Registry,
    sets: HashMap<String, IdSet>,
    collected_at: String,
}

impl Snapshot {
    /// Loads every follower file declared by the registry from under `root`.
    /// The result is independent of load order and concurrency.
    pub fn load(
        registry: &Registry,
        root: &Path,
        opts: &IngestOptions,
    ) -> Result<(Snapshot, IngestReport), IngestError> {
        let loaded: Vec<(String, IdSet, FileReport)> = registry
            .entities()
            .par_iter()
            .map(|entity| {
                let (set, report) = load_entity_file(
                    &entity.handle,
                    root,
                    &entity.follower_file,
                    entity.digest.as_deref(),
                    opts,
                )?;
                Ok((entity.handle.clone(), set, report))
            })
            .collect::<Result<_, IngestError>>()?;

        let mut sets = HashMap::with_capacity(loaded.len());
        let mut report = IngestReport::default();
        for (handle, set, file_report) in loaded {
            report.per_entity.insert(handle.clone(), file_report);
            sets.insert(handle, set);
        }
        Ok((
            Snapshot {
                registry: registry.clone(),
                sets,
                collected_at: registry
                    .collected_at()
                    .unwrap_or("unspecified")
                    .to_string(),
            },
            report,
        ))
    }

    /// Builds a snapshot from already-materialized sets. Every registry
    /// entity must have exactly one set.
    pub fn from_parts(
        registry: Registry,
        sets: HashMap<String, IdSet>,
        collected_at: impl Into<String>,
    ) -> Result<Snapshot, IngestError> {
        for entity in registry.entities() {
            if !sets.contains_key(&entity.handle) {
                return Err(IngestError::MissingSet {
                    handle: entity.handle.clone(),
                });
            }
        }
        for handle in sets.keys() {
            if registry.entity(handle).is_none() {
                return Err(IngestError::UnexpectedSet {
                    handle: handle.clone(),
                });
            }
        }
        Ok(Snapshot {
            registry,
            sets,
            collected_at: collected_at.into(),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn collected_at(&self) -> &str {
        &self.collected_at
    }

    pub fn set(&self, handle: &str) -> Option<&IdSet> {
        self.sets.get(handle)
    }

    /// Set lookup that treats absence as a bug in snapshot construction.
    pub fn expect_set(&self, handle: &str) -> &IdSet {
        self.sets
            .get(handle)
            .expect("snapshot invariant: every registry entity has a set")
    }
}

/// Reads one follower file in the given format.
pub fn read_follower_file(
    path: &Path,
    format: FileFormat,
    opts: &IngestOptions,
) -> Result<(IdSet, FileReport), IngestError> {
    match format {
        FileFormat::Text => read_text(path, opts),
        FileFormat::Binary => read_binary(path),
    }
}

/// Sniffs the `IDS1` magic to pick a format; anything else parses as text.
pub fn detect_format(path: &Path) -> Result<FileFormat, IngestError> {
    let mut file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut head = [0u8; 4];
    let mut have = 0;
    while have < 4 {
        let n = file.read(&mut head[have..]).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if n == 0 {
            break;
        }
        have += n;
    }
    if have == 4 && head == MAGIC {
        Ok(FileFormat::Binary)
    } else {
        Ok(FileFormat::Text)
    }
}

/// Checks every follower file against the manifest, collecting all
/// violations rather than stopping at the first.
pub fn validate_dataset(registry: &Registry, root: &Path, opts: &IngestOptions) -> Vec<IngestError> {
    registry
        .entities()
        .par_iter()
        .filter_map(|entity| {
            load_entity_file(
                &entity.handle,
                root,
                &entity.follower_file,
                entity.digest.as_deref(),
                opts,
            )
            .err()
        })
        .collect()
}

fn load_entity_file(
    handle: &str,
    root: &Path,
    follower_file: &Path,
    expected_digest: Option<&str>,
    opts: &IngestOptions,
) -> Result<(IdSet, FileReport), IngestError> {
    if follower_file.is_absolute()
        || follower_file
            .components()
            .any(|c| matches!(c, Component::ParentDir))
    {
        return Err(IngestError::PathEscapesRoot {
            handle: handle.to_string(),
            path: follower_file.to_path_buf(),
        });
    }
    let path = root.join(follower_file);
    if !path.is_file() {
        return Err(IngestError::MissingFile {
            handle: handle.to_string(),
            path,
        });
    }
    let format = detect_format(&path)?;
    let (set, report) = read_follower_file(&path, format, opts)?;
    if let Some(expected) = expected_digest {
        if !expected.eq_ignore_ascii_case(&report.digest) {
            return Err(IngestError::DigestMismatch {
                handle: handle.to_string(),
                expected: expected.to_string(),
                actual: report.digest,
            });
        }
    }
    log::debug!(
        "ingested {handle}: {} distinct ids ({} raw)",
        report.distinct_count,
        report.raw_count
    );
    Ok((set, report))
}

fn read_text(path: &Path, opts: &IngestOptions) -> Result<(IdSet, FileReport), IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let digest = sha256_tag(&bytes);

    let mut parsed: Vec<u64> = Vec::new();
    let mut raw = 0u64;
    let mut malformed = 0u64;
    for line in bytes.split(|&b| b == b'\n') {
        let line = trim_ascii(line);
        if line.is_empty() {
            continue;
        }
        raw += 1;
        match std::str::from_utf8(line).ok().and_then(|s| s.parse::<u64>().ok()) {
            Some(id) => parsed.push(id),
            None => malformed += 1,
        }
    }
    if raw > 0 && malformed as f64 / raw as f64 > opts.malformed_threshold {
        return Err(IngestError::MalformedFractionExceeded {
            path: path.to_path_buf(),
            malformed,
            raw,
            threshold: opts.malformed_threshold,
        });
    }

    let parsed_ok = parsed.len() as u64;
    let set = IdSet::build(parsed.into_iter().map(crate::idset::UserId));
    let report = FileReport {
        raw_count: raw,
        distinct_count: set.len(),
        duplicate_count: parsed_ok - set.len(),
        malformed_line_count: malformed,
        digest,
    };
    Ok((set, report))
}

fn read_binary(path: &Path) -> Result<(IdSet, FileReport), IngestError> {
    let io_err = |source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut file = std::fs::File::open(path).map_err(io_err)?;
    let mut hasher = Sha256::new();
    let mut parser = IdStreamParser::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf).map_err(io_err)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        parser.feed(&buf[..n]).map_err(|source| IngestError::Binary {
            path: path.to_path_buf(),
            source,
        })?;
    }
    let set = parser.finish().map_err(|source| IngestError::Binary {
        path: path.to_path_buf(),
        source,
    })?;
    let report = FileReport {
        raw_count: set.len(),
        distinct_count: set.len(),
        duplicate_count: 0,
        malformed_line_count: 0,
        digest: hex_tag(&hasher.finalize()),
    };
    Ok((set, report))
}

fn trim_ascii(mut line: &[u8]) -> &[u8] {
    while let [first, rest @ ..] = line {
        if first.is_ascii_whitespace() {
            line = rest;
        } else {
            break;
        }
    }
    while let [rest @ .., last] = line {
        if last.is_ascii_whitespace() {
            line = rest;
        } else {
            break;
        }
    }
    line
}

/// `sha256:<hex>` over the given bytes.
pub fn sha256_tag(bytes: &[u8]) -> String {
    hex_tag(&Sha256::digest(bytes))
}

fn hex_tag(digest: &[u8]) -> String {
    let mut out = String::with_capacity(7 + digest.len() * 2);
    out.push_str("sha256:");
    for b in digest {
        write!(out, "{b:02x}").unwrap();
    }
    out
}
