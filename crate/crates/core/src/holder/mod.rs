//! The provenance holder: a controller over one or more providers.
//!
//! Collect = receive + validate + record, atomically per call.
//! Retrieve = retrieve + validate; integrity problems come back as a
//! verdict next to the records, never as an error.
//!
//! Each provider sits behind its own reader-writer lock, so writes to one
//! provider are serialized while reads and validation run concurrently and
//! only ever observe whole batches.

mod provider;
mod record;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use std::time::Duration;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::adaptation::{trace_changes_in_carrier_order, validate_adaptation, AdaptationError, ChangeEvent};
use crate::timestamp::Timestamp;
use crate::violation::Violation;
use crate::xes::{validate_log, EventLog};

pub use provider::{FileProvider, MemoryProvider, ProvenanceProvider, ProviderError, StorageKind};
pub use record::{canonical_json, compute_digest, Digest, ExecutionPayload, NewRecord, ProvenanceRecord, RecordKind};

pub const DEFAULT_WRITE_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, thiserror::Error)]
pub enum HolderError {
    #[error("submission failed validation with {} violation(s)", .0.len())]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Adaptation(#[from] AdaptationError),
    #[error("entry {index} is not a valid {kind} record: {reason}")]
    InvalidEntry { index: usize, kind: RecordKind, reason: String },
    #[error("unknown provider `{0}`")]
    UnknownProvider(String),
    #[error("provider `{0}` is already registered")]
    DuplicateProvider(String),
    #[error("provider `{0}` is busy")]
    ProviderBusy(String),
    #[error("source provider failed integrity validation: {0}")]
    SourceTampered(IntegrityVerdict),
    #[error("cannot migrate provider `{0}` onto itself")]
    SameProvider(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

/// Outcome of chain validation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum IntegrityVerdict {
    Valid,
    Tampered {
        provider_id: String,
        /// Position of the first bad record in append order.
        index: usize,
        /// Id of that record, when it can still be read.
        record_id: Option<Uuid>,
    },
}

impl IntegrityVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, IntegrityVerdict::Valid)
    }
}

impl fmt::Display for IntegrityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrityVerdict::Valid => f.write_str("Valid"),
            IntegrityVerdict::Tampered { record_id: Some(id), .. } => write!(f, "Tampered at {id}"),
            IntegrityVerdict::Tampered { index, .. } => write!(f, "Tampered at record #{index}"),
        }
    }
}

/// Checks digests and links from genesis; reports the first broken record.
pub fn validate_records(provider_id: &str, records: &[ProvenanceRecord]) -> IntegrityVerdict {
    let mut expected_prev = Digest::ZERO;
    for (index, record) in records.iter().enumerate() {
        if record.prev_digest != expected_prev || record.recompute_digest() != record.digest {
            return IntegrityVerdict::Tampered {
                provider_id: provider_id.to_string(),
                index,
                record_id: Some(record.record_id),
            };
        }
        expected_prev = record.digest;
    }
    IntegrityVerdict::Valid
}

fn verdict_for(provider_id: &str, loaded: Result<Vec<ProvenanceRecord>, ProviderError>) -> Result<(Vec<ProvenanceRecord>, IntegrityVerdict), HolderError> {
    match loaded {
        Ok(records) => {
            let verdict = validate_records(provider_id, &records);
            Ok((records, verdict))
        }
        Err(ProviderError::Corrupt { index, record_id, .. }) => Ok((
            Vec::new(),
            IntegrityVerdict::Tampered {
                provider_id: provider_id.to_string(),
                index,
                record_id,
            },
        )),
        Err(other) => Err(other.into()),
    }
}

/// Filter for [`ProvenanceHolder::retrieve`]. All filters are conjunctive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProvenanceQuery {
    provider: Option<String>,
    instance_id: Option<String>,
    kind: Option<RecordKind>,
    time_range: Option<(Timestamp, Timestamp)>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("time range starts at {0} after it ends at {1}")]
pub struct InvalidTimeRange(pub Timestamp, pub Timestamp);

impl ProvenanceQuery {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn instance(mut self, instance_id: &str) -> Self {
        self.instance_id = Some(instance_id.to_string());
        self
    }

    pub fn kind(mut self, kind: RecordKind) -> Self {
        self.kind = Some(kind);
        self
    }

    /// Reads from the named provider instead of the default one.
    pub fn provider(mut self, provider_id: &str) -> Self {
        self.provider = Some(provider_id.to_string());
        self
    }

    /// Inclusive range over `recorded_at`.
    pub fn recorded_between(mut self, from: Timestamp, to: Timestamp) -> Result<Self, InvalidTimeRange> {
        if from > to {
            return Err(InvalidTimeRange(from, to));
        }
        self.time_range = Some((from, to));
        Ok(self)
    }

    pub fn matches(&self, record: &ProvenanceRecord) -> bool {
        self.instance_id.as_ref().is_none_or(|id| &record.instance_id == id)
            && self.kind.is_none_or(|k| record.kind == k)
            && self
                .time_range
                .is_none_or(|(from, to)| record.recorded_at >= from && record.recorded_at <= to)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProviderDescriptor {
    pub provider_id: String,
    pub storage_kind: StorageKind,
    pub record_count: usize,
}

/// Ids of the records appended by one collect call, in append order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectReport {
    pub record_ids: Vec<Uuid>,
    pub change_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub records: Vec<ProvenanceRecord>,
    pub verdict: IntegrityVerdict,
}

type SharedProvider = Arc<RwLock<Box<dyn ProvenanceProvider>>>;
type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

/// Controller of the provenance holder. Cheap to clone; clones share the
/// same providers.
#[derive(Clone)]
pub struct ProvenanceHolder {
    providers: BTreeMap<String, SharedProvider>,
    default_provider: String,
    write_timeout: Duration,
    clock: Clock,
}

impl fmt::Debug for ProvenanceHolder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProvenanceHolder")
            .field("providers", &self.providers.keys().collect::<Vec<_>>())
            .field("default_provider", &self.default_provider)
            .finish()
    }
}

impl ProvenanceHolder {
    /// Creates a holder writing to `default_provider`.
    pub fn new(default_provider: Box<dyn ProvenanceProvider>) -> Self {
        let id = default_provider.provider_id().to_string();
        ProvenanceHolder {
            providers: BTreeMap::from([(id.clone(), Arc::new(RwLock::new(default_provider)))]),
            default_provider: id,
            write_timeout: DEFAULT_WRITE_TIMEOUT,
            clock: Arc::new(Timestamp::now),
        }
    }

    pub fn with_clock(mut self, clock: impl Fn() -> Timestamp + Send + Sync + 'static) -> Self {
        self.clock = Arc::new(clock);
        self
    }

    /// How long a write waits for its provider before giving up as busy.
    pub fn with_write_timeout(mut self, timeout: Duration) -> Self {
        self.write_timeout = timeout;
        self
    }

    pub fn add_provider(&mut self, provider: Box<dyn ProvenanceProvider>) -> Result<(), HolderError> {
        let id = provider.provider_id().to_string();
        if self.providers.contains_key(&id) {
            return Err(HolderError::DuplicateProvider(id));
        }
        self.providers.insert(id, Arc::new(RwLock::new(provider)));
        Ok(())
    }

    pub fn default_provider_id(&self) -> &str {
        &self.default_provider
    }

    /// Default provider first, then the others by id.
    pub fn providers(&self) -> Vec<ProviderDescriptor> {
        let mut ids: Vec<&String> = self.providers.keys().collect();
        ids.sort_by_key(|id| (**id != self.default_provider, (*id).clone()));
        ids.into_iter()
            .map(|id| {
                let p = self.providers[id].read();
                ProviderDescriptor {
                    provider_id: id.clone(),
                    storage_kind: p.storage_kind(),
                    record_count: p.len(),
                }
            })
            .collect()
    }

    fn provider(&self, id: &str) -> Result<&SharedProvider, HolderError> {
        self.providers.get(id).ok_or_else(|| HolderError::UnknownProvider(id.to_string()))
    }

    /// Turns a log into records: each execution event, followed directly by
    /// the insert it carries, then the trace's deletes.
    pub fn receive_log(log: &EventLog) -> Result<Vec<NewRecord>, HolderError> {
        let mut violations = validate_log(log);
        violations.extend(validate_adaptation(log));
        if !violations.is_empty() {
            return Err(HolderError::Invalid(violations));
        }
        let mut entries = Vec::with_capacity(log.event_count());
        for (t, trace) in log.traces.iter().enumerate() {
            let instance = trace.instance_id().unwrap_or_default();
            let mut changes = trace_changes_in_carrier_order(trace, t)?.into_iter().peekable();
            for (e, event) in trace.events.iter().enumerate() {
                entries.push(NewRecord::execution(instance, &ExecutionPayload::from_event(event)));
                while let Some((_, change)) = changes.next_if(|(carrier, _)| *carrier == Some(e)) {
                    entries.push(NewRecord::change(&change));
                }
            }
            entries.extend(changes.map(|(_, change)| NewRecord::change(&change)));
        }
        Ok(entries)
    }

    fn check_entries(entries: &[NewRecord]) -> Result<(), HolderError> {
        for (index, entry) in entries.iter().enumerate() {
            let reason = match entry.kind {
                RecordKind::Execution => serde_json::from_value::<ExecutionPayload>(entry.payload.clone())
                    .err()
                    .map(|e| e.to_string()),
                RecordKind::Change => match serde_json::from_value::<ChangeEvent>(entry.payload.clone()) {
                    Err(e) => Some(e.to_string()),
                    Ok(c) if c.instance_id != entry.instance_id => Some("instance id differs from the payload".into()),
                    Ok(_) => None,
                },
            };
            if let Some(reason) = reason {
                return Err(HolderError::InvalidEntry {
                    index,
                    kind: entry.kind,
                    reason,
                });
            }
        }
        Ok(())
    }

    /// Collects a log into the default provider.
    pub fn collect_log(&self, log: &EventLog) -> Result<CollectReport, HolderError> {
        self.collect_log_into(&self.default_provider, log)
    }

    pub fn collect_log_into(&self, provider_id: &str, log: &EventLog) -> Result<CollectReport, HolderError> {
        let entries = Self::receive_log(log)?;
        let change_count = entries.iter().filter(|e| e.kind == RecordKind::Change).count();
        let record_ids = self.record(provider_id, entries)?;
        Ok(CollectReport {
            record_ids,
            change_count,
        })
    }

    /// Collects pre-built entries. Payloads must decode as
    /// [`ExecutionPayload`] or [`ChangeEvent`] according to their kind.
    pub fn collect_entries(&self, provider_id: Option<&str>, entries: Vec<NewRecord>) -> Result<Vec<Uuid>, HolderError> {
        Self::check_entries(&entries)?;
        self.record(provider_id.unwrap_or(&self.default_provider), entries)
    }

    fn record(&self, provider_id: &str, entries: Vec<NewRecord>) -> Result<Vec<Uuid>, HolderError> {
        let shared = self.provider(provider_id)?;
        let mut provider = shared
            .try_write_for(self.write_timeout)
            .ok_or_else(|| HolderError::ProviderBusy(provider_id.to_string()))?;
        let recorded_at = (self.clock)();
        let mut prev = provider.tail_digest()?;
        let sealed: Vec<ProvenanceRecord> = entries
            .into_iter()
            .map(|entry| {
                let record = ProvenanceRecord::seal(entry, Uuid::new_v4(), recorded_at, prev);
                prev = record.digest;
                record
            })
            .collect();
        provider.record(&sealed)?;
        Ok(sealed.iter().map(|r| r.record_id).collect())
    }

    /// Matching records in append order plus the integrity verdict of the
    /// provider they were read from.
    pub fn retrieve(&self, query: &ProvenanceQuery) -> Result<Retrieval, HolderError> {
        let id = query.provider.as_deref().unwrap_or(&self.default_provider);
        let loaded = self.provider(id)?.read().retrieve();
        let (records, verdict) = verdict_for(id, loaded)?;
        Ok(Retrieval {
            records: records.into_iter().filter(|r| query.matches(r)).collect(),
            verdict,
        })
    }

    pub fn validate_chain(&self, provider_id: &str) -> Result<IntegrityVerdict, HolderError> {
        let loaded = self.provider(provider_id)?.read().retrieve();
        Ok(verdict_for(provider_id, loaded)?.1)
    }

    /// Copies every record of `from` into the empty provider `to`.
    pub fn migrate(&self, from: &str, to: &str) -> Result<usize, HolderError> {
        if from == to {
            return Err(HolderError::SameProvider(from.to_string()));
        }
        let source = self.provider(from)?;
        let destination = self.provider(to)?;
        let source = source
            .try_read_for(self.write_timeout)
            .ok_or_else(|| HolderError::ProviderBusy(from.to_string()))?;
        let mut destination = destination
            .try_write_for(self.write_timeout)
            .ok_or_else(|| HolderError::ProviderBusy(to.to_string()))?;
        let (_, verdict) = verdict_for(from, source.retrieve())?;
        if !verdict.is_valid() {
            return Err(HolderError::SourceTampered(verdict));
        }
        Ok(source.migrate(destination.as_mut())?)
    }
}
