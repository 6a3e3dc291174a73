use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use uuid::Uuid;

use super::record::{Digest, ProvenanceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StorageKind {
    Memory,
    AppendOnlyFile,
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("provider I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("stored record {index} cannot be decoded: {reason}")]
    Corrupt {
        index: usize,
        record_id: Option<Uuid>,
        reason: String,
    },
    #[error("destination provider `{0}` is not empty")]
    DestinationNotEmpty(String),
    #[error("provider `{provider}` rejected the write: {reason}")]
    Rejected { provider: String, reason: String },
}

/// Storage backend of the provenance holder.
///
/// Providers only ever append. `record` must store the whole batch or
/// nothing.
pub trait ProvenanceProvider: Send + Sync {
    fn provider_id(&self) -> &str;

    fn storage_kind(&self) -> StorageKind;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Digest of the last stored record, or zero for an empty chain.
    fn tail_digest(&self) -> Result<Digest, ProviderError>;

    fn record(&mut self, records: &[ProvenanceRecord]) -> Result<(), ProviderError>;

    /// Every stored record in append order.
    fn retrieve(&self) -> Result<Vec<ProvenanceRecord>, ProviderError>;

    /// Copies every record, unchanged and in order, into an empty provider.
    /// The source keeps its records.
    fn migrate(&self, destination: &mut dyn ProvenanceProvider) -> Result<usize, ProviderError> {
        if !destination.is_empty() {
            return Err(ProviderError::DestinationNotEmpty(destination.provider_id().to_string()));
        }
        let records = self.retrieve()?;
        destination.record(&records)?;
        Ok(records.len())
    }
}

/// Records held in process memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryProvider {
    id: String,
    records: Vec<ProvenanceRecord>,
}

impl MemoryProvider {
    pub fn new(id: &str) -> Self {
        MemoryProvider {
            id: id.to_string(),
            records: Vec::new(),
        }
    }

    /// Restores a provider from a snapshot. The chain is taken as given and
    /// not checked; run validation to find out whether it is intact.
    pub fn from_records(id: &str, records: Vec<ProvenanceRecord>) -> Self {
        MemoryProvider {
            id: id.to_string(),
            records,
        }
    }
}

impl ProvenanceProvider for MemoryProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn storage_kind(&self) -> StorageKind {
        StorageKind::Memory
    }

    fn len(&self) -> usize {
        self.records.len()
    }

    fn tail_digest(&self) -> Result<Digest, ProviderError> {
        Ok(self.records.last().map_or(Digest::ZERO, |r| r.digest))
    }

    fn record(&mut self, records: &[ProvenanceRecord]) -> Result<(), ProviderError> {
        self.records.extend_from_slice(records);
        Ok(())
    }

    fn retrieve(&self) -> Result<Vec<ProvenanceRecord>, ProviderError> {
        Ok(self.records.clone())
    }
}

/// Append-only JSON-lines file, one record per line.
#[derive(Debug)]
pub struct FileProvider {
    id: String,
    path: PathBuf,
    len: usize,
}

impl FileProvider {
    /// Opens the file, creating it (and its directory) when missing.
    pub fn open(id: &str, path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        OpenOptions::new().create(true).append(true).open(&path)?;
        let len = read_lines(&path)?.len();
        Ok(FileProvider {
            id: id.to_string(),
            path,
            len,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>, ProviderError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

fn decode(index: usize, line: &str) -> Result<ProvenanceRecord, ProviderError> {
    serde_json::from_str(line).map_err(|e| {
        let record_id = serde_json::from_str::<serde_json::Value>(line)
            .ok()
            .and_then(|v| v.get("record_id").and_then(|id| id.as_str()).and_then(|s| Uuid::parse_str(s).ok()));
        ProviderError::Corrupt {
            index,
            record_id,
            reason: e.to_string(),
        }
    })
}

impl ProvenanceProvider for FileProvider {
    fn provider_id(&self) -> &str {
        &self.id
    }

    fn storage_kind(&self) -> StorageKind {
        StorageKind::AppendOnlyFile
    }

    fn len(&self) -> usize {
        self.len
    }

    fn tail_digest(&self) -> Result<Digest, ProviderError> {
        let lines = read_lines(&self.path)?;
        match lines.last() {
            None => Ok(Digest::ZERO),
            Some(line) => Ok(decode(lines.len() - 1, line)?.digest),
        }
    }

    fn record(&mut self, records: &[ProvenanceRecord]) -> Result<(), ProviderError> {
        if records.is_empty() {
            return Ok(());
        }
        let mut buf = String::new();
        for record in records {
            buf.push_str(&record.to_json_line());
            buf.push('\n');
        }
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        let before = file.metadata()?.len();
        let written = file.write_all(buf.as_bytes()).and_then(|_| file.sync_data());
        if let Err(err) = written {
            // roll back a partial append
            file.set_len(before)?;
            return Err(err.into());
        }
        self.len += records.len();
        Ok(())
    }

    fn retrieve(&self) -> Result<Vec<ProvenanceRecord>, ProviderError> {
        read_lines(&self.path)?
            .iter()
            .enumerate()
            .map(|(i, line)| decode(i, line))
            .collect()
    }
}
