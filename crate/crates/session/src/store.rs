//! Event persistence: an in-memory store for tests and simulation, and a
//! directory of JSON-lines logs (one file per session) with compacted snapshots.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{Result, SessionError};
use crate::event::EventRecord;
use crate::state::SessionState;

pub trait EventStore: Send + Sync {
    fn append(&self, session_id: &str, records: &[EventRecord]) -> Result<()>;
    fn load(&self, session_id: &str) -> Result<Vec<EventRecord>>;
    /// All stored session ids, sorted.
    fn session_ids(&self) -> Result<Vec<String>>;

    fn write_snapshot(&self, _state: &SessionState) -> Result<()> {
        Ok(())
    }

    fn read_snapshot(&self, _session_id: &str) -> Result<Option<SessionState>> {
        Ok(None)
    }

    /// Latest state: the snapshot (if any) plus every event after it.
    fn restore(&self, session_id: &str) -> Result<SessionState> {
        let records = self.load(session_id)?;
        match self.read_snapshot(session_id)? {
            Some(mut state) => {
                let from = state.last_seq;
                for r in records.iter().filter(|r| r.seq > from) {
                    state.apply(r)?;
                }
                Ok(state)
            }
            None => SessionState::replay(&records),
        }
    }
}

#[derive(Debug, Default)]
pub struct MemoryStore {
    logs: Mutex<BTreeMap<String, Vec<EventRecord>>>,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl EventStore for MemoryStore {
    fn append(&self, session_id: &str, records: &[EventRecord]) -> Result<()> {
        self.logs.lock().unwrap().entry(session_id.to_string()).or_default().extend_from_slice(records);
        Ok(())
    }

    fn load(&self, session_id: &str) -> Result<Vec<EventRecord>> {
        self.logs
            .lock()
            .unwrap()
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(session_id.to_string()))
    }

    fn session_ids(&self) -> Result<Vec<String>> {
        Ok(self.logs.lock().unwrap().keys().cloned().collect())
    }
}

#[derive(Debug)]
pub struct FileStore {
    dir: PathBuf,
    // Serializes appends; each session has a single writer anyway, this only
    // keeps the directory listing consistent with half-created files.
    write_lock: Mutex<()>,
}

impl FileStore {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(FileStore { dir: dir.as_ref().to_path_buf(), write_lock: Mutex::new(()) })
    }

    fn log_path(&self, session_id: &str) -> Result<PathBuf> {
        if session_id.is_empty() || !session_id.chars().all(|c| c.is_ascii_alphanumeric() || "-_".contains(c)) {
            return Err(SessionError::UnknownSession(session_id.to_string()));
        }
        Ok(self.dir.join(format!("{session_id}.jsonl")))
    }

    fn snapshot_path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.snapshot.json"))
    }
}

impl EventStore for FileStore {
    fn append(&self, session_id: &str, records: &[EventRecord]) -> Result<()> {
        let path = self.log_path(session_id)?;
        let _guard = self.write_lock.lock().unwrap();
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r)?;
            buf.push(b'\n');
        }
        let mut f = OpenOptions::new().create(true).append(true).open(path)?;
        f.write_all(&buf)?;
        f.sync_data()?;
        Ok(())
    }

    fn load(&self, session_id: &str) -> Result<Vec<EventRecord>> {
        let path = self.log_path(session_id)?;
        if !path.exists() {
            return Err(SessionError::UnknownSession(session_id.to_string()));
        }
        let mut out = Vec::new();
        for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(
                serde_json::from_str(&line)
                    .map_err(|e| SessionError::Storage(format!("{session_id}.jsonl line {}: {e}", i + 1)))?,
            );
        }
        Ok(out)
    }

    fn session_ids(&self) -> Result<Vec<String>> {
        let mut ids: Vec<String> = fs::read_dir(&self.dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().to_str()?.strip_suffix(".jsonl").map(str::to_string))
            .collect();
        ids.sort();
        Ok(ids)
    }

    fn write_snapshot(&self, state: &SessionState) -> Result<()> {
        let path = self.snapshot_path(&state.session_id);
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, serde_json::to_vec(state)?)?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    fn read_snapshot(&self, session_id: &str) -> Result<Option<SessionState>> {
        let path = self.snapshot_path(session_id);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(serde_json::from_slice(&fs::read(path)?)?))
    }
}
