//! Append-only experiment record store.
//!
//! Records live in a single log file of length-prefixed JSON entries
//! (`u32` little-endian byte length, then the payload). The whole log is read
//! back into memory on open; a torn final entry from an interrupted write is
//! truncated away. Writers are serialized behind one mutex and every entry is
//! synced to disk before its id is handed out. Readers clone an `Arc` of the
//! current snapshot and never wait on a write in progress.

mod csv;
mod filter;
mod record;

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::recipe::{DesignSpace, Recipe};

pub use self::csv::{records_to_csv, CSV_HEADER};
pub use filter::RecordFilter;
pub use record::{image_digest, ExperimentRecord, FieldError, NewRecord, Source};

/// File name of the log inside the data directory.
pub const LOG_FILE: &str = "records.log";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("record rejected: {}", join_fields(.0))]
    Validation(Vec<FieldError>),
    #[error("storage failure (retriable): {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt log entry at byte offset {offset}: {message}")]
    Corrupt { offset: u64, message: String },
    #[error("csv line {line}: {message}")]
    Csv { line: u64, message: String },
}

fn join_fields(errs: &[FieldError]) -> String {
    errs.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

struct Writer {
    file: Option<File>,
    next_id: u64,
}

struct Inner {
    path: Option<PathBuf>,
    space: DesignSpace,
    writer: Mutex<Writer>,
    snapshot: RwLock<Arc<Vec<ExperimentRecord>>>,
}

/// Shared handle to a record store; clones refer to the same store.
#[derive(Clone)]
pub struct Store {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for Store {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Store")
            .field("path", &self.inner.path)
            .field("records", &self.len())
            .finish()
    }
}

fn now_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Store {
    /// A store that lives only in memory.
    pub fn in_memory() -> Self {
        Self::build(None, None, Vec::new())
    }

    /// Opens (or creates) the log in `dir`, replaying every stored record.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)?;
        let records = replay(&mut file)?;
        Ok(Self::build(Some(path), Some(file), records))
    }

    fn build(path: Option<PathBuf>, file: Option<File>, records: Vec<ExperimentRecord>) -> Self {
        let next_id = records.last().map_or(1, |r| r.id + 1);
        Store {
            inner: Arc::new(Inner {
                path,
                space: DesignSpace::default(),
                writer: Mutex::new(Writer { file, next_id }),
                snapshot: RwLock::new(Arc::new(records)),
            }),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.inner.path.as_deref()
    }

    pub fn space(&self) -> DesignSpace {
        self.inner.space
    }

    /// Validates and durably appends a record, returning its new id.
    pub fn submit(&self, record: NewRecord) -> Result<u64, StoreError> {
        let ids = self.append_batch(vec![(record, None)])?;
        Ok(ids[0])
    }

    /// Appends every record in one write, or none of them if any is invalid.
    /// A `Some` timestamp is kept as given (used by CSV import).
    pub(crate) fn append_batch(&self, batch: Vec<(NewRecord, Option<u64>)>) -> Result<Vec<u64>, StoreError> {
        let mut problems = Vec::new();
        for (rec, _) in &batch {
            problems.extend(rec.validate(self.inner.space));
        }
        if !problems.is_empty() {
            return Err(StoreError::Validation(problems));
        }

        let mut writer = self.inner.writer.lock().unwrap_or_else(|p| p.into_inner());
        let timestamp = now_seconds();
        let mut accepted = Vec::with_capacity(batch.len());
        let mut bytes = Vec::new();
        for (i, (rec, ts)) in batch.into_iter().enumerate() {
            let rec = rec
                .normalized()
                .accept(writer.next_id + i as u64, ts.unwrap_or(timestamp));
            let payload = serde_json::to_vec(&rec).expect("records always serialize");
            bytes.extend_from_slice(&(payload.len() as u32).to_le_bytes());
            bytes.extend_from_slice(&payload);
            accepted.push(rec);
        }
        if let Some(file) = writer.file.as_mut() {
            let before = file.metadata()?.len();
            if let Err(e) = file.write_all(&bytes).and_then(|_| file.sync_data()) {
                // Drop any partial entry so the log stays replayable.
                let _ = file.set_len(before);
                return Err(e.into());
            }
        }
        writer.next_id += accepted.len() as u64;

        let ids = accepted.iter().map(|r| r.id).collect();
        let mut snap = self.inner.snapshot.write().unwrap_or_else(|p| p.into_inner());
        let mut next = Vec::with_capacity(snap.len() + accepted.len());
        next.extend_from_slice(&snap);
        next.extend(accepted);
        *snap = Arc::new(next);
        Ok(ids)
    }

    /// The current immutable view of every record, in id order.
    pub fn snapshot(&self) -> Arc<Vec<ExperimentRecord>> {
        self.inner
            .snapshot
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .clone()
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: u64) -> Option<ExperimentRecord> {
        let snap = self.snapshot();
        snap.binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| snap[i].clone())
    }

    /// Every record matching the filter, in id order.
    pub fn query(&self, filter: &RecordFilter) -> Vec<ExperimentRecord> {
        self.snapshot()
            .iter()
            .filter(|r| filter.matches(r))
            .cloned()
            .collect()
    }

    /// Records with exactly this recipe, in id order.
    pub fn find_by_recipe(&self, recipe: &Recipe) -> Vec<ExperimentRecord> {
        self.snapshot()
            .iter()
            .filter(|r| r.recipe == *recipe)
            .cloned()
            .collect()
    }

    pub fn export_csv(&self, filter: &RecordFilter) -> String {
        csv::records_to_csv(&self.query(filter))
    }

    /// Parses, validates and appends every row; nothing is stored on any error.
    pub fn import_csv(&self, text: &str) -> Result<usize, StoreError> {
        let rows = csv::parse(text, self.inner.space)?;
        let n = rows.len();
        if n > 0 {
            self.append_batch(rows)?;
        }
        Ok(n)
    }
}

fn replay(file: &mut File) -> Result<Vec<ExperimentRecord>, StoreError> {
    let mut bytes = Vec::new();
    file.seek(SeekFrom::Start(0))?;
    file.read_to_end(&mut bytes)?;
    let mut records: Vec<ExperimentRecord> = Vec::new();
    let mut pos = 0usize;
    while pos + 4 <= bytes.len() {
        let len = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
        if pos + 4 + len > bytes.len() {
            break;
        }
        let rec: ExperimentRecord =
            serde_json::from_slice(&bytes[pos + 4..pos + 4 + len]).map_err(|e| StoreError::Corrupt {
                offset: pos as u64,
                message: e.to_string(),
            })?;
        if records.last().is_some_and(|last| last.id >= rec.id) {
            return Err(StoreError::Corrupt {
                offset: pos as u64,
                message: format!("id {} does not increase", rec.id),
            });
        }
        records.push(rec);
        pos += 4 + len;
    }
    if pos < bytes.len() {
        // Torn tail from an interrupted append.
        file.set_len(pos as u64)?;
        file.sync_data()?;
    }
    Ok(records)
}
