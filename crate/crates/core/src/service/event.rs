//! The append-only event log.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, ErrorKind, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ServiceError;
use crate::alerting::{AlertId, IncidentReport};
use crate::canonical::to_canonical_string;
use crate::geo::{GeoPoint, Millis};
use crate::registry::{UnitId, User, UserId, VehicleRecord};
use crate::trajectory::Sighting;

pub const LOG_FILE: &str = "events.log";
pub const DIGEST_FILE: &str = "state.digest";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    pub at: Millis,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// Everything a replay needs is in the payload: repository lookups and
/// recipient sets are captured when the command runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventKind {
    UserRegistered {
        user: User,
    },
    LocationUpdated {
        user_id: UserId,
        position: GeoPoint,
    },
    IncidentOpened {
        alert_id: AlertId,
        report: IncidentReport,
        vehicle: Option<VehicleRecord>,
        offender: Option<UserId>,
        recipients: Vec<UserId>,
    },
    SightingMatched {
        alert_id: AlertId,
        sighting: Sighting,
        score: f64,
        fuzzy: bool,
    },
    SightingUnmatched {
        sighting: Sighting,
    },
    AlertEscalated {
        alert_id: AlertId,
        recipients: Vec<UserId>,
    },
    UnitDispatched {
        alert_id: AlertId,
        unit_id: UnitId,
    },
    AlertClosed {
        alert_id: AlertId,
    },
    OperatorMessage {
        user_id: UserId,
        text: String,
    },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::UserRegistered { .. } => "UserRegistered",
            Self::LocationUpdated { .. } => "LocationUpdated",
            Self::IncidentOpened { .. } => "IncidentOpened",
            Self::SightingMatched { .. } => "SightingMatched",
            Self::SightingUnmatched { .. } => "SightingUnmatched",
            Self::AlertEscalated { .. } => "AlertEscalated",
            Self::UnitDispatched { .. } => "UnitDispatched",
            Self::AlertClosed { .. } => "AlertClosed",
            Self::OperatorMessage { .. } => "OperatorMessage",
        }
    }
}

impl Event {
    pub fn to_line(&self) -> String {
        to_canonical_string(self).expect("events always serialize")
    }
}

/// Parses a log, requiring `seq` to run 1, 2, 3, ... without gaps.
pub fn parse_log(text: &str) -> Result<Vec<Event>, ServiceError> {
    parse_lines(text.lines().map(|l| Ok(l.to_owned())))
}

/// Reads `path`; a missing file is an empty log.
pub fn read_log(path: impl AsRef<Path>) -> Result<Vec<Event>, ServiceError> {
    match File::open(path.as_ref()) {
        Ok(f) => parse_lines(BufReader::new(f).lines()),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(ServiceError::Io(e.to_string())),
    }
}

fn parse_lines(
    lines: impl Iterator<Item = std::io::Result<String>>,
) -> Result<Vec<Event>, ServiceError> {
    let mut out: Vec<Event> = Vec::new();
    for line in lines {
        let line = line.map_err(|e| ServiceError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let expected = out.len() as u64 + 1;
        let event: Event = serde_json::from_str(&line).map_err(|e| ServiceError::LogCorrupt {
            seq: expected,
            reason: e.to_string(),
        })?;
        if event.seq != expected {
            return Err(ServiceError::LogCorrupt {
                seq: expected,
                reason: format!("found seq {}", event.seq),
            });
        }
        out.push(event);
    }
    Ok(out)
}

/// Appends events to `<dir>/events.log` and writes digests next to it.
#[derive(Debug)]
pub struct LogWriter {
    dir: PathBuf,
    file: File,
}

impl LogWriter {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let dir = dir.as_ref().to_path_buf();
        std::fs::create_dir_all(&dir).map_err(|e| ServiceError::Io(e.to_string()))?;
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(LOG_FILE))
            .map_err(|e| ServiceError::Io(e.to_string()))?;
        Ok(Self { dir, file })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn append(&mut self, event: &Event) -> Result<(), ServiceError> {
        let mut line = event.to_line();
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| ServiceError::Io(e.to_string()))
    }

    pub fn write_digest(&mut self, digest: &str) -> Result<(), ServiceError> {
        self.file.sync_data().map_err(|e| ServiceError::Io(e.to_string()))?;
        let tmp = self.dir.join(format!("{DIGEST_FILE}.tmp"));
        std::fs::write(&tmp, format!("{digest}\n"))
            .and_then(|_| std::fs::rename(&tmp, self.dir.join(DIGEST_FILE)))
            .map_err(|e| ServiceError::Io(e.to_string()))
    }
}
