//! On-disk session storage. Each session owns a directory holding its
//! append-only `events.jsonl` and an optional `snapshot.json`. The log is
//! the source of truth; snapshots only shorten replay.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;
use tracing::warn;
use tutor_core::orchestrator::{from_jsonl, to_jsonl};
use tutor_core::{Event, Gateway, Session, SessionState};

const EVENTS: &str = "events.jsonl";
const SNAPSHOT: &str = "snapshot.json";

/// Rounds between snapshots.
pub const SNAPSHOT_EVERY: u32 = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Quarantined {
    pub session_id: String,
    pub reason: String,
}

/// Sessions rebuilt at startup, and the logs that could not be replayed.
pub struct Recovery {
    pub sessions: Vec<Session>,
    pub quarantined: Vec<Quarantined>,
}

#[derive(Debug, Clone)]
pub struct EventStore {
    root: PathBuf,
}

impl EventStore {
    pub fn open(data_dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(data_dir.join("sessions"))?;
        fs::create_dir_all(data_dir.join("quarantine"))?;
        Ok(Self {
            root: data_dir.to_path_buf(),
        })
    }

    pub fn session_dir(&self, id: &str) -> PathBuf {
        self.root.join("sessions").join(id)
    }

    pub fn log_path(&self, id: &str) -> PathBuf {
        self.session_dir(id).join(EVENTS)
    }

    pub fn snapshot_path(&self, id: &str) -> PathBuf {
        self.session_dir(id).join(SNAPSHOT)
    }

    /// Writes the log of a new session.
    pub fn create(&self, id: &str, events: &[Event]) -> io::Result<()> {
        let dir = self.session_dir(id);
        if dir.exists() {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("session {id} exists"),
            ));
        }
        fs::create_dir_all(&dir)?;
        self.append(id, events)?;
        sync_dir(&dir);
        sync_dir(&self.root.join("sessions"));
        Ok(())
    }

    /// Appends events and syncs them to disk. A failed write is cut back so
    /// the log never ends in a partial line.
    pub fn append(&self, id: &str, events: &[Event]) -> io::Result<()> {
        if events.is_empty() {
            return Ok(());
        }
        let path = self.log_path(id);
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        let before = file.metadata()?.len();
        let written = file
            .write_all(to_jsonl(events).as_bytes())
            .and_then(|_| file.sync_data());
        if let Err(e) = written {
            if let Err(cut) = file.set_len(before) {
                warn!(session = id, error = %cut, "could not cut back a failed append");
            }
            return Err(e);
        }
        Ok(())
    }

    /// Replaces the snapshot atomically.
    pub fn write_snapshot(&self, state: &SessionState) -> io::Result<()> {
        let path = self.snapshot_path(&state.session_id);
        let tmp = path.with_extension("json.tmp");
        {
            let mut f = File::create(&tmp)?;
            f.write_all(&serde_json::to_vec(state).map_err(io::Error::other)?)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        sync_dir(&self.session_dir(&state.session_id));
        Ok(())
    }

    /// Reads one session back from disk.
    pub fn load(&self, id: &str, gateway: Arc<Gateway>) -> Result<Session, String> {
        let text =
            fs::read_to_string(self.log_path(id)).map_err(|e| format!("unreadable log: {e}"))?;
        if text.is_empty() {
            return Err("empty log".into());
        }
        if !text.ends_with('\n') {
            return Err("truncated final line".into());
        }
        let events = from_jsonl(&text).map_err(|(line, e)| format!("line {line}: {e}"))?;
        if let Some(snapshot) = self.read_snapshot(id) {
            match Session::resume_from(gateway.clone(), snapshot, events.clone()) {
                Ok(s) => return Ok(s),
                Err(e) => {
                    warn!(session = id, error = %e, "snapshot disagrees with the log, replaying in full")
                }
            }
        }
        Session::resume(gateway, events).map_err(|e| e.to_string())
    }

    fn read_snapshot(&self, id: &str) -> Option<SessionState> {
        let bytes = fs::read(self.snapshot_path(id)).ok()?;
        match serde_json::from_slice::<SessionState>(&bytes) {
            Ok(s) if s.session_id == id => Some(s),
            Ok(_) => None,
            Err(e) => {
                warn!(session = id, error = %e, "ignoring unreadable snapshot");
                None
            }
        }
    }

    /// Rebuilds every stored session. Logs that cannot be replayed are
    /// moved to `quarantine/` and reported; the rest recover.
    pub fn recover(&self, gateway: Arc<Gateway>) -> io::Result<Recovery> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("sessions"))?
            .filter_map(Result::ok)
            .filter(|e| e.path().is_dir())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        ids.sort();

        let mut out = Recovery {
            sessions: Vec::new(),
            quarantined: Vec::new(),
        };
        for id in ids {
            match self.load(&id, gateway.clone()) {
                Ok(s) => out.sessions.push(s),
                Err(reason) => {
                    warn!(session = %id, %reason, "quarantining session");
                    self.quarantine(&id)?;
                    out.quarantined.push(Quarantined {
                        session_id: id,
                        reason,
                    });
                }
            }
        }
        Ok(out)
    }

    fn quarantine(&self, id: &str) -> io::Result<()> {
        let base = self.root.join("quarantine");
        let mut target = base.join(id);
        let mut n = 1;
        while target.exists() {
            target = base.join(format!("{id}.{n}"));
            n += 1;
        }
        fs::rename(self.session_dir(id), target)
    }
}

fn sync_dir(dir: &Path) {
    if let Ok(d) = File::open(dir) {
        let _ = d.sync_all();
    }
}
