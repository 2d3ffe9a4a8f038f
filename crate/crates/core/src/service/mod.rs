//! Event-sourced coordination service.
//!
//! Every accepted command becomes exactly one [`Event`]; state is the fold of
//! the log. Commands validate first and append only on success, so a failed
//! request leaves both state and log untouched. Time is always an argument.

mod event;
mod state;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use event::{parse_log, read_log, Event, EventKind, LogWriter, DIGEST_FILE, LOG_FILE};
pub use state::{Delivery, PushItem, State};

use crate::alerting::{
    encode_alert_message, find_duplicate, nearest_available_unit, open_incident, recipients_for,
    select_match, should_escalate, Alert, AlertConfig, AlertError, AlertId, AlertState,
    IncidentReport,
};
use crate::geo::{GeoError, GeoPoint, Millis};
use crate::registry::{
    LeaUnit, MemoryVehicleRepository, PlateGrammar, RegistryError, ReporterMode, UnitId, User,
    UserId, VehicleRecord, VehicleRepository,
};
use crate::trajectory::{project_path, ProjectedPoint, Sighting, SightingSource, TrajectoryError};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Alert(#[from] AlertError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error("Unauthorized: missing or invalid token")]
    Unauthorized,
    #[error("LogCorrupt: seq {seq}: {reason}")]
    LogCorrupt { seq: u64, reason: String },
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("InvalidRequest: {0}")]
    InvalidRequest(String),
    #[error("Io: {0}")]
    Io(String),
}

impl ServiceError {
    /// The error's name, e.g. `InvalidPlate`.
    pub fn code(&self) -> String {
        let s = self.to_string();
        s.split(':').next().unwrap_or_default().to_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConfig {
    pub unit_id: String,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    /// Salts national-id digests and bearer tokens.
    pub salt: String,
    pub plate_pattern: String,
    pub alert: AlertConfig,
    pub units: Vec<UnitConfig>,
    /// Write `state.digest` after this many events (0 disables).
    pub checkpoint_every: u64,
    /// Projected-path sampling for the operator view.
    pub path_horizon_s: f64,
    pub path_step_s: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            salt: String::new(),
            plate_pattern: crate::registry::DEFAULT_PLATE_PATTERN.to_owned(),
            alert: AlertConfig::default(),
            units: Vec::new(),
            checkpoint_every: 100,
            path_horizon_s: 300.0,
            path_step_s: 60.0,
        }
    }
}

impl ServiceConfig {
    pub fn validate(&self) -> Result<PlateGrammar, ServiceError> {
        let grammar: PlateGrammar = self
            .plate_pattern
            .parse()
            .map_err(|e: RegistryError| ServiceError::ConfigInvalid(e.to_string()))?;
        self.alert
            .validate()
            .map_err(|e| ServiceError::ConfigInvalid(e.to_string()))?;
        let mut seen = std::collections::BTreeSet::new();
        for u in &self.units {
            u.position
                .validated()
                .map_err(|e| ServiceError::ConfigInvalid(e.to_string()))?;
            if !seen.insert(&u.unit_id) {
                return Err(ServiceError::ConfigInvalid(format!("duplicate unit {}", u.unit_id)));
            }
        }
        if !(self.path_horizon_s > 0.0 && self.path_step_s > 0.0) {
            return Err(ServiceError::ConfigInvalid("path horizon and step must be positive".into()));
        }
        Ok(grammar)
    }

    fn initial_units(&self) -> BTreeMap<UnitId, LeaUnit> {
        self.units
            .iter()
            .map(|u| {
                let unit = LeaUnit::available(u.unit_id.clone(), u.position.without_time());
                (unit.unit_id.clone(), unit)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum SightingOutcome {
    Matched { alert_id: AlertId, fuzzy: bool },
    Unmatched,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum DispatchOutcome {
    Dispatched { unit_id: UnitId },
    NoUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registration {
    pub user_id: UserId,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub items: Vec<Delivery>,
    pub next_cursor: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserMarker {
    pub user_id: UserId,
    pub mode: ReporterMode,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertView {
    pub alert: Alert,
    pub vehicle: Option<VehicleRecord>,
    pub projected_path: Vec<ProjectedPoint>,
}

/// What the operator console draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSnapshot {
    pub last_seq: u64,
    pub users: Vec<UserMarker>,
    pub alerts: Vec<AlertView>,
    pub units: Vec<LeaUnit>,
}

pub struct Service {
    config: ServiceConfig,
    grammar: PlateGrammar,
    vehicles: Arc<dyn VehicleRepository>,
    state: State,
    events: Vec<Event>,
    writer: Option<LogWriter>,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("last_seq", &self.state.last_seq())
            .field("events", &self.events.len())
            .finish_non_exhaustive()
    }
}

impl Service {
    /// An in-memory service with an empty log.
    pub fn new(config: ServiceConfig, vehicles: Arc<dyn VehicleRepository>) -> Result<Self, ServiceError> {
        Self::replay(config, vehicles, Vec::new())
    }

    /// Rebuilds state by folding `events` in order.
    pub fn replay(
        config: ServiceConfig,
        vehicles: Arc<dyn VehicleRepository>,
        events: Vec<Event>,
    ) -> Result<Self, ServiceError> {
        let grammar = config.validate()?;
        let mut state = State::new(&config.salt, config.initial_units());
        for (i, e) in events.iter().enumerate() {
            if e.seq != i as u64 + 1 {
                return Err(ServiceError::LogCorrupt {
                    seq: i as u64 + 1,
                    reason: format!("found seq {}", e.seq),
                });
            }
            state.apply(e, &config.alert).map_err(|err| ServiceError::LogCorrupt {
                seq: e.seq,
                reason: err.to_string(),
            })?;
        }
        Ok(Self {
            config,
            grammar,
            vehicles,
            state,
            events,
            writer: None,
        })
    }

    /// Replays `<dir>/events.log` and keeps appending to it.
    pub fn open(
        config: ServiceConfig,
        vehicles: Arc<dyn VehicleRepository>,
        dir: impl AsRef<Path>,
    ) -> Result<Self, ServiceError> {
        let events = read_log(dir.as_ref().join(LOG_FILE))?;
        let mut svc = Self::replay(config, vehicles, events)?;
        svc.writer = Some(LogWriter::open(dir)?);
        Ok(svc)
    }

    /// An in-memory service with no vehicle records.
    pub fn in_memory(config: ServiceConfig) -> Result<Self, ServiceError> {
        Self::new(config, Arc::new(MemoryVehicleRepository::new([])))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn last_seq(&self) -> u64 {
        self.state.last_seq()
    }

    /// Hex SHA-256 of the canonical state.
    pub fn digest(&self) -> String {
        self.state.digest()
    }

    /// Writes `state.digest` when backed by a directory.
    pub fn checkpoint(&mut self) -> Result<(), ServiceError> {
        let digest = self.state.digest();
        match self.writer.as_mut() {
            Some(w) => w.write_digest(&digest),
            None => Ok(()),
        }
    }

    fn commit(&mut self, at: Millis, kind: EventKind) -> Result<&Event, ServiceError> {
        let event = Event {
            seq: self.state.last_seq() + 1,
            at,
            kind,
        };
        if let Some(w) = self.writer.as_mut() {
            w.append(&event)?;
        }
        // Commands check everything `apply` checks, so this cannot fail
        // after the line is written.
        self.state.apply(&event, &self.config.alert)?;
        self.events.push(event);
        let every = self.config.checkpoint_every;
        if self.writer.is_some() && every > 0 && self.state.last_seq().is_multiple_of(every) {
            self.checkpoint()?;
        }
        Ok(self.events.last().expect("just pushed"))
    }

    pub fn token_for(&self, user_id: UserId) -> String {
        let mut h = Sha256::new();
        h.update(self.config.salt.as_bytes());
        h.update(b"\0token\0");
        h.update(user_id.0.to_be_bytes());
        hex::encode(h.finalize())
    }

    /// Checks a bearer token for a registered user.
    pub fn authenticate(&self, user_id: UserId, token: &str) -> Result<(), ServiceError> {
        if !self.state.registry().contains(user_id) || self.token_for(user_id) != token {
            return Err(ServiceError::Unauthorized);
        }
        Ok(())
    }

    pub fn register(
        &mut self,
        national_id: &str,
        mode: ReporterMode,
        now: Millis,
    ) -> Result<Registration, ServiceError> {
        let user = self.state.registry().prepare_user(national_id, mode, now)?;
        let user_id = user.user_id;
        self.commit(now, EventKind::UserRegistered { user })?;
        Ok(Registration {
            user_id,
            token: self.token_for(user_id),
        })
    }

    pub fn update_location(
        &mut self,
        user_id: UserId,
        position: GeoPoint,
        now: Millis,
    ) -> Result<(), ServiceError> {
        let position = stamp(position, now)?;
        self.state.registry().check_location(user_id, &position)?;
        self.commit(now, EventKind::LocationUpdated { user_id, position })?;
        Ok(())
    }

    /// Opens an alert, or attaches the report to an alert it duplicates.
    pub fn report_incident(
        &mut self,
        user_id: UserId,
        plate_raw: &str,
        description: &str,
        position: GeoPoint,
        now: Millis,
    ) -> Result<AlertId, ServiceError> {
        let reporter = self
            .state
            .registry()
            .user(user_id)
            .ok_or(AlertError::UnknownReporter(user_id))?;
        let source = source_for(reporter.mode);
        let plate = self.grammar.normalize(plate_raw)?;
        let origin = stamp(position, now)?;
        let report = IncidentReport {
            plate,
            description: description.to_owned(),
            origin,
            reporter: user_id,
        };
        let cfg = self.config.alert;

        if let Some(alert_id) = find_duplicate(&report, self.state.alerts().values(), &cfg) {
            let sighting = Sighting::new(report.plate, origin, user_id, 1.0, source)?;
            self.check_sighting(alert_id, &sighting)?;
            self.commit(
                now,
                EventKind::SightingMatched {
                    alert_id,
                    sighting,
                    score: 1.0,
                    fuzzy: false,
                },
            )?;
            return Ok(alert_id);
        }

        let alert_id = self.state.next_alert_id();
        let alert = open_incident(alert_id, report.clone(), self.state.registry(), &cfg)?;
        // Repository trouble must not block the alert; it just goes out without details.
        let vehicle = self.vehicles.lookup(&alert.incident.plate).ok();
        encode_alert_message(&alert, vehicle.as_ref(), &cfg)?;
        let offender = vehicle
            .as_ref()
            .and_then(|v| self.state.registry().user_for_national_id(&v.owner_ref));
        let recipients = recipients_for(&alert, self.state.registry(), &cfg, offender)
            .into_iter()
            .collect();
        self.commit(
            now,
            EventKind::IncidentOpened {
                alert_id,
                report,
                vehicle,
                offender,
                recipients,
            },
        )?;
        Ok(alert_id)
    }

    fn check_sighting(&self, alert_id: AlertId, s: &Sighting) -> Result<(), ServiceError> {
        let mut probe = self
            .state
            .alerts()
            .get(&alert_id)
            .ok_or(AlertError::UnknownAlert(alert_id))?
            .clone();
        probe.record_sighting(s.clone())?;
        Ok(())
    }

    pub fn submit_sighting(
        &mut self,
        user_id: UserId,
        plate_raw: &str,
        position: GeoPoint,
        confidence: f64,
        now: Millis,
    ) -> Result<SightingOutcome, ServiceError> {
        let reporter = self
            .state
            .registry()
            .user(user_id)
            .ok_or(AlertError::UnknownReporter(user_id))?;
        let source = source_for(reporter.mode);
        let plate = self.grammar.normalize(plate_raw)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(RegistryError::InvalidConfidence(confidence).into());
        }
        let sighting = Sighting::new(plate, stamp(position, now)?, user_id, confidence, source)?;

        let Some(m) = select_match(&sighting.plate, self.state.alerts().values(), &self.config.alert)
        else {
            self.commit(now, EventKind::SightingUnmatched { sighting })?;
            return Ok(SightingOutcome::Unmatched);
        };
        let sighting = Sighting {
            plate: self.state.alerts()[&m.alert_id].incident.plate.clone(),
            ..sighting
        };
        self.check_sighting(m.alert_id, &sighting)?;
        self.commit(
            now,
            EventKind::SightingMatched {
                alert_id: m.alert_id,
                sighting,
                score: m.score,
                fuzzy: m.fuzzy,
            },
        )?;
        Ok(SightingOutcome::Matched {
            alert_id: m.alert_id,
            fuzzy: m.fuzzy,
        })
    }

    /// Deliveries after `cursor`, oldest first.
    pub fn poll(&self, user_id: UserId, cursor: u64) -> Result<Page, ServiceError> {
        if !self.state.registry().contains(user_id) {
            return Err(RegistryError::UnknownUser(user_id).into());
        }
        let len = self.state.channel_len(user_id) as u64;
        Ok(Page {
            items: self
                .state
                .channel(user_id)
                .skip(cursor.min(len) as usize)
                .cloned()
                .collect(),
            next_cursor: cursor.max(len),
        })
    }

    /// Escalates every alert whose timer has run out. Returns the escalated ids.
    pub fn tick(&mut self, now: Millis) -> Result<Vec<AlertId>, ServiceError> {
        let cfg = self.config.alert;
        let due: Vec<AlertId> = self
            .state
            .alerts()
            .values()
            .filter(|a| should_escalate(a, now, &cfg))
            .map(|a| a.alert_id)
            .collect();
        for &alert_id in &due {
            let mut next = self.state.alerts()[&alert_id].clone();
            next.escalate(now)?;
            let offender = self.state.offender(alert_id);
            let recipients = recipients_for(&next, self.state.registry(), &cfg, offender)
                .into_iter()
                .collect();
            self.commit(now, EventKind::AlertEscalated { alert_id, recipients })?;
        }
        Ok(due)
    }

    /// Sends `unit_id`, or the nearest available unit when `None`.
    pub fn dispatch(
        &mut self,
        alert_id: AlertId,
        unit_id: Option<UnitId>,
        now: Millis,
    ) -> Result<DispatchOutcome, ServiceError> {
        let alert = self
            .state
            .alerts()
            .get(&alert_id)
            .ok_or(AlertError::UnknownAlert(alert_id))?;
        if !matches!(
            alert.state,
            AlertState::VicinityBroadcast | AlertState::CityWideBroadcast
        ) {
            return Err(AlertError::InvalidTransition {
                from: alert.state,
                to: AlertState::Dispatched,
            }
            .into());
        }
        let unit_id = match unit_id {
            Some(id) => {
                let unit = self
                    .state
                    .units()
                    .get(&id)
                    .ok_or_else(|| AlertError::UnknownUnit(id.clone()))?;
                if !unit.is_available() {
                    return Err(AlertError::UnitUnavailable(id).into());
                }
                id
            }
            None => match nearest_available_unit(alert, self.state.units().values(), now, &self.config.alert)? {
                Some((id, _)) => id,
                None => return Ok(DispatchOutcome::NoUnit),
            },
        };
        self.commit(
            now,
            EventKind::UnitDispatched {
                alert_id,
                unit_id: unit_id.clone(),
            },
        )?;
        Ok(DispatchOutcome::Dispatched { unit_id })
    }

    pub fn close(&mut self, alert_id: AlertId, now: Millis) -> Result<(), ServiceError> {
        let alert = self
            .state
            .alerts()
            .get(&alert_id)
            .ok_or(AlertError::UnknownAlert(alert_id))?;
        if alert.state == AlertState::Closed {
            return Err(AlertError::InvalidTransition {
                from: AlertState::Closed,
                to: AlertState::Closed,
            }
            .into());
        }
        self.commit(now, EventKind::AlertClosed { alert_id })?;
        Ok(())
    }

    pub fn operator_message(&mut self, user_id: UserId, text: &str, now: Millis) -> Result<(), ServiceError> {
        if !self.state.registry().contains(user_id) {
            return Err(RegistryError::UnknownUser(user_id).into());
        }
        if text.trim().is_empty() {
            return Err(ServiceError::InvalidRequest("message text is empty".into()));
        }
        self.commit(
            now,
            EventKind::OperatorMessage {
                user_id,
                text: text.to_owned(),
            },
        )?;
        Ok(())
    }

    pub fn operator_snapshot(&self) -> OperatorSnapshot {
        let users = self
            .state
            .registry()
            .users()
            .filter_map(|u: &User| {
                u.last_position.map(|position| UserMarker {
                    user_id: u.user_id,
                    mode: u.mode,
                    position,
                })
            })
            .collect();
        let alerts = self
            .state
            .alerts()
            .values()
            .filter(|a| a.is_active())
            .map(|a| AlertView {
                alert: a.clone(),
                vehicle: self.state.vehicle(a.alert_id).cloned(),
                projected_path: if a.profile.fit().is_some() {
                    project_path(
                        &a.profile,
                        self.config.path_horizon_s,
                        self.config.path_step_s,
                        &self.config.alert.projection,
                    )
                    .unwrap_or_default()
                } else {
                    Vec::new()
                },
            })
            .collect();
        OperatorSnapshot {
            last_seq: self.state.last_seq(),
            users,
            alerts,
            units: self.state.units().values().cloned().collect(),
        }
    }
}

fn source_for(mode: ReporterMode) -> SightingSource {
    match mode {
        ReporterMode::Pedestrian => SightingSource::Pedestrian,
        ReporterMode::Dashcam => SightingSource::Dashcam,
        ReporterMode::FixedCamera => SightingSource::FixedCamera,
    }
}

/// Validates the point and fills in the request time when it has none.
fn stamp(p: GeoPoint, now: Millis) -> Result<GeoPoint, ServiceError> {
    let p = p.validated()?;
    Ok(if p.t().is_some() { p } else { p.with_time(now) })
}
