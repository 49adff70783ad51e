use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use inpaint_eval_core::judgements::Side;
use serde::{Deserialize, Serialize};

use crate::{Session, StudyError};

/// One line of the append-only study log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    SessionCreated {
        session: Session,
    },
    ChoiceRecorded {
        session_id: String,
        pair_id: String,
        chosen: Side,
        timestamp: DateTime<Utc>,
    },
}

/// Parses the log. A final line without its newline is the remains of an
/// interrupted append and is ignored; returns the events and the length of
/// the intact prefix.
fn parse(path: &Path, bytes: &[u8]) -> Result<(Vec<LogEvent>, usize), StudyError> {
    let intact = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
    let text = std::str::from_utf8(&bytes[..intact]).map_err(|e| StudyError::CorruptLog {
        path: path.to_owned(),
        line: 0,
        reason: e.to_string(),
    })?;
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(line).map_err(|e| StudyError::CorruptLog {
            path: path.to_owned(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        events.push(event);
    }
    Ok((events, intact))
}

/// Reads a log without opening it for writing. A missing file is an empty
/// study.
pub fn read_events(path: impl AsRef<Path>) -> Result<Vec<LogEvent>, StudyError> {
    let path = path.as_ref();
    match fs::read(path) {
        Ok(bytes) => Ok(parse(path, &bytes)?.0),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(source) => Err(StudyError::Log {
            path: path.to_owned(),
            source,
        }),
    }
}

pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (creating if needed) and replays the log, dropping a torn
    /// final line so later appends start on a clean line.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<LogEvent>), StudyError> {
        let path = path.as_ref().to_owned();
        let io = |source| StudyError::Log {
            path: path.clone(),
            source,
        };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io)?;
        }
        let file = OpenOptions::new()
            .read(true)
            .append(true)
            .create(true)
            .open(&path)
            .map_err(io)?;
        let bytes = fs::read(&path).map_err(io)?;
        let (events, intact) = parse(&path, &bytes)?;
        if intact < bytes.len() {
            tracing::warn!(path = %path.display(), dropped = bytes.len() - intact, "discarding torn final log line");
            file.set_len(intact as u64).map_err(io)?;
        }
        Ok((EventLog { path, file }, events))
    }

    /// Writes one event and syncs it to disk before returning.
    pub fn append(&mut self, event: &LogEvent) -> Result<(), StudyError> {
        let mut line = serde_json::to_vec(event).expect("log events serialize");
        line.push(b'\n');
        let io = |source| StudyError::Log {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io)?;
        self.file.flush().map_err(io)?;
        self.file.sync_data().map_err(io)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}
