//! The alert state machine.
//!
//! An alert starts as a vicinity broadcast around the incident, widens to
//! the whole city when nobody responds before the escalation timeout, moves
//! to `Dispatched` once a unit is assigned and finally `Closed`. States only
//! ever move forward. Time is always passed in; nothing here reads a clock.

mod message;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{haversine_distance, GeoPoint, Millis};
use crate::registry::{
    plate_similarity, LeaUnit, PlateId, Registry, ReporterMode, UnitId, UnitStatus, UserId,
};
use crate::trajectory::{
    project_position, ProjectionConfig, Sighting, SightingSource, TrackProfile, TrajectoryError,
    DEFAULT_FIT_WINDOW, DEFAULT_WINDOW,
};

pub use message::{decode_alert_message, encode_alert_message, AlertMessage, VehicleDetails, TRUNCATION_MARKER};

/// Hard upper bound on an encoded alert, bytes.
pub const MAX_PAYLOAD_LIMIT: usize = 4_096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlertError {
    #[error("UnknownReporter: {0} is not registered")]
    UnknownReporter(UserId),
    #[error("MissingTimestamp: incident origin must carry a timestamp")]
    MissingTimestamp,
    #[error("ConfigInvalid: {0}")]
    ConfigInvalid(String),
    #[error("InvalidTransition: cannot go from {from:?} to {to:?}")]
    InvalidTransition { from: AlertState, to: AlertState },
    #[error("UnknownAlert: {0}")]
    UnknownAlert(AlertId),
    #[error("UnknownUnit: {0}")]
    UnknownUnit(UnitId),
    #[error("UnitUnavailable: {0} is already dispatched")]
    UnitUnavailable(UnitId),
    #[error("Unencodable: fixed fields need {needed} bytes, limit is {max}")]
    Unencodable { needed: usize, max: usize },
    #[error("DecodeError: {0}")]
    Decode(String),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AlertId(pub u64);

impl fmt::Display for AlertId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Ordered: transitions must go to a strictly greater state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AlertState {
    VicinityBroadcast,
    CityWideBroadcast,
    Dispatched,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CityBoundary {
    pub center: GeoPoint,
    pub radius_m: f64,
}

impl CityBoundary {
    pub fn contains(&self, p: &GeoPoint) -> bool {
        haversine_distance(&self.center, p) <= self.radius_m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlertConfig {
    pub vicinity_radius_m: f64,
    pub escalation_timeout_s: f64,
    pub city: CityBoundary,
    pub max_payload: usize,
    /// 1.0 means exact plate matches only.
    pub match_threshold: f64,
    /// How far ahead the target is projected when choosing a unit, seconds.
    pub lead_time_s: f64,
    /// Reports of the same plate this close in time and space collapse into one alert.
    pub duplicate_window_s: f64,
    pub duplicate_radius_m: f64,
    pub projection: ProjectionConfig,
    pub track_window: usize,
    pub fit_window: usize,
}

impl Default for AlertConfig {
    fn default() -> Self {
        Self {
            vicinity_radius_m: 10_000.0,
            escalation_timeout_s: 900.0,
            city: CityBoundary {
                center: GeoPoint::new(33.6844, 73.0479).expect("valid default city center"),
                radius_m: 30_000.0,
            },
            max_payload: MAX_PAYLOAD_LIMIT,
            match_threshold: 1.0,
            lead_time_s: 120.0,
            duplicate_window_s: 60.0,
            duplicate_radius_m: 500.0,
            projection: ProjectionConfig::default(),
            track_window: DEFAULT_WINDOW,
            fit_window: DEFAULT_FIT_WINDOW,
        }
    }
}

impl AlertConfig {
    pub fn validate(&self) -> Result<(), AlertError> {
        let positive = [
            ("vicinity_radius_m", self.vicinity_radius_m),
            ("escalation_timeout_s", self.escalation_timeout_s),
            ("city.radius_m", self.city.radius_m),
            ("lead_time_s", self.lead_time_s),
            ("duplicate_window_s", self.duplicate_window_s),
            ("duplicate_radius_m", self.duplicate_radius_m),
            ("projection.sigma0_m", self.projection.sigma0_m),
            ("projection.growth_mps", self.projection.growth_mps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(AlertError::ConfigInvalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_payload == 0 || self.max_payload > MAX_PAYLOAD_LIMIT {
            return Err(AlertError::ConfigInvalid(format!(
                "max_payload must be in 1..={MAX_PAYLOAD_LIMIT}, got {}",
                self.max_payload
            )));
        }
        if !(self.match_threshold > 0.0 && self.match_threshold <= 1.0) {
            return Err(AlertError::ConfigInvalid(format!(
                "match_threshold must be in (0, 1], got {}",
                self.match_threshold
            )));
        }
        if self.track_window == 0 || self.fit_window < 2 {
            return Err(AlertError::ConfigInvalid("track_window >= 1 and fit_window >= 2".into()));
        }
        self.city
            .center
            .validated()
            .map_err(|e| AlertError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }

    fn timeout_ms(&self) -> Millis {
        (self.escalation_timeout_s * 1000.0).round() as Millis
    }
}

/// What a reporter sends in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentReport {
    pub plate: PlateId,
    pub description: String,
    pub origin: GeoPoint,
    pub reporter: UserId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incident {
    pub plate: PlateId,
    pub description: String,
    pub origin: GeoPoint,
    pub reported_at: Millis,
    pub reporter: UserId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub at: Millis,
    pub state: AlertState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub alert_id: AlertId,
    pub incident: Incident,
    pub state: AlertState,
    pub profile: TrackProfile,
    pub dispatched_unit: Option<UnitId>,
    pub history: Vec<Transition>,
    /// Time of the earliest matched sighting after the originating report.
    pub first_response_at: Option<Millis>,
    pub responses: u32,
}

impl Alert {
    pub fn is_active(&self) -> bool {
        self.state != AlertState::Closed
    }

    /// Position of the newest sighting in the profile.
    pub fn latest_position(&self) -> GeoPoint {
        self.profile
            .last()
            .map(|s| s.position)
            .unwrap_or(self.incident.origin)
    }

    fn transition(&mut self, to: AlertState, at: Millis) -> Result<(), AlertError> {
        if to <= self.state {
            return Err(AlertError::InvalidTransition { from: self.state, to });
        }
        self.state = to;
        self.history.push(Transition { at, state: to });
        Ok(())
    }

    /// Appends a matched sighting and records it as a response.
    pub fn record_sighting(&mut self, s: Sighting) -> Result<(), AlertError> {
        if self.state == AlertState::Closed {
            return Err(AlertError::InvalidTransition {
                from: AlertState::Closed,
                to: AlertState::Closed,
            });
        }
        let t = s.t();
        self.profile.add_sighting(s)?;
        self.responses += 1;
        self.first_response_at = Some(self.first_response_at.map_or(t, |f| f.min(t)));
        Ok(())
    }

    pub fn mark_dispatched(&mut self, unit: UnitId, at: Millis) -> Result<(), AlertError> {
        if !matches!(
            self.state,
            AlertState::VicinityBroadcast | AlertState::CityWideBroadcast
        ) {
            return Err(AlertError::InvalidTransition {
                from: self.state,
                to: AlertState::Dispatched,
            });
        }
        self.transition(AlertState::Dispatched, at)?;
        self.dispatched_unit = Some(unit);
        Ok(())
    }

    pub fn close(&mut self, at: Millis) -> Result<(), AlertError> {
        self.transition(AlertState::Closed, at)
    }

    pub fn escalate(&mut self, at: Millis) -> Result<(), AlertError> {
        if self.state != AlertState::VicinityBroadcast {
            return Err(AlertError::InvalidTransition {
                from: self.state,
                to: AlertState::CityWideBroadcast,
            });
        }
        self.transition(AlertState::CityWideBroadcast, at)
    }

    pub fn reached(&self, state: AlertState) -> bool {
        self.history.iter().any(|t| t.state == state)
    }
}

fn source_for(mode: ReporterMode) -> SightingSource {
    match mode {
        ReporterMode::Pedestrian => SightingSource::Pedestrian,
        ReporterMode::Dashcam => SightingSource::Dashcam,
        ReporterMode::FixedCamera => SightingSource::FixedCamera,
    }
}

/// Creates a new alert in `VicinityBroadcast`, seeded with the report as
/// its first sighting.
pub fn open_incident(
    alert_id: AlertId,
    report: IncidentReport,
    registry: &Registry,
    config: &AlertConfig,
) -> Result<Alert, AlertError> {
    let reporter = registry
        .user(report.reporter)
        .ok_or(AlertError::UnknownReporter(report.reporter))?;
    let reported_at = report.origin.t().ok_or(AlertError::MissingTimestamp)?;
    let seed = Sighting::new(
        report.plate.clone(),
        report.origin,
        report.reporter,
        1.0,
        source_for(reporter.mode),
    )?;
    let mut profile =
        TrackProfile::with_windows(report.plate.clone(), config.track_window, config.fit_window);
    profile.add_sighting(seed)?;
    Ok(Alert {
        alert_id,
        incident: Incident {
            plate: report.plate,
            description: report.description,
            origin: report.origin,
            reported_at,
            reporter: report.reporter,
        },
        state: AlertState::VicinityBroadcast,
        profile,
        dispatched_unit: None,
        history: vec![Transition {
            at: reported_at,
            state: AlertState::VicinityBroadcast,
        }],
        first_response_at: None,
        responses: 0,
    })
}

/// An active alert this report duplicates: same plate, close in time and space.
pub fn find_duplicate<'a>(
    report: &IncidentReport,
    alerts: impl IntoIterator<Item = &'a Alert>,
    config: &AlertConfig,
) -> Option<AlertId> {
    let t = report.origin.t()?;
    let window = (config.duplicate_window_s * 1000.0).round() as Millis;
    alerts
        .into_iter()
        .filter(|a| a.is_active() && a.incident.plate == report.plate)
        .filter(|a| (t - a.incident.reported_at).abs() <= window)
        .filter(|a| haversine_distance(&a.incident.origin, &report.origin) <= config.duplicate_radius_m)
        .max_by_key(|a| (a.incident.reported_at, a.alert_id))
        .map(|a| a.alert_id)
}

/// Who should receive the alert right now.
///
/// Vicinity broadcasts go to users near the newest known position; after
/// escalation, to everyone inside the city boundary. `exclude` removes the
/// offender's own account when it is known.
pub fn recipients_for(
    alert: &Alert,
    registry: &Registry,
    config: &AlertConfig,
    exclude: Option<UserId>,
) -> BTreeSet<UserId> {
    let mut out = match alert.state {
        AlertState::Closed => return BTreeSet::new(),
        AlertState::VicinityBroadcast => {
            registry.users_within(&alert.latest_position(), config.vicinity_radius_m)
        }
        AlertState::CityWideBroadcast => {
            registry.users_within(&config.city.center, config.city.radius_m)
        }
        AlertState::Dispatched => {
            if alert.reached(AlertState::CityWideBroadcast) {
                registry.users_within(&config.city.center, config.city.radius_m)
            } else {
                registry.users_within(&alert.latest_position(), config.vicinity_radius_m)
            }
        }
    };
    if let Some(x) = exclude {
        out.remove(&x);
    }
    out
}

/// Whether a tick at `now` escalates the alert.
pub fn should_escalate(alert: &Alert, now: Millis, config: &AlertConfig) -> bool {
    let deadline = alert.incident.reported_at + config.timeout_ms();
    alert.state == AlertState::VicinityBroadcast
        && now >= deadline
        && alert.first_response_at.is_none_or(|t| t >= deadline)
}

/// Escalates to a city-wide broadcast when the timeout has passed with no
/// response before the deadline. Returns whether a transition happened.
pub fn tick(alert: &mut Alert, now: Millis, config: &AlertConfig) -> bool {
    if should_escalate(alert, now, config) {
        alert.escalate(now).is_ok()
    } else {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SightingMatch {
    pub alert_id: AlertId,
    pub score: f64,
    /// Set when the plate matched only approximately and needs review.
    pub fuzzy: bool,
}

/// Picks the alert a sighting belongs to, if any.
pub fn select_match<'a>(
    plate: &PlateId,
    alerts: impl IntoIterator<Item = &'a Alert>,
    config: &AlertConfig,
) -> Option<SightingMatch> {
    let key = |a: &Alert| (a.incident.reported_at, a.alert_id);
    let active = alerts.into_iter().filter(|a| a.is_active());
    if config.match_threshold >= 1.0 {
        return active
            .filter(|a| &a.incident.plate == plate)
            .max_by_key(|a| key(a))
            .map(|a| SightingMatch {
                alert_id: a.alert_id,
                score: 1.0,
                fuzzy: false,
            });
    }
    let mut best: Option<(f64, &Alert)> = None;
    for a in active {
        let score = plate_similarity(plate, &a.incident.plate);
        if score < config.match_threshold {
            continue;
        }
        let better = match best {
            None => true,
            Some((s, b)) => score > s || (score == s && key(a) > key(b)),
        };
        if better {
            best = Some((score, a));
        }
    }
    best.map(|(score, a)| SightingMatch {
        alert_id: a.alert_id,
        score,
        fuzzy: score < 1.0,
    })
}

/// Matches a sighting and appends it to the chosen alert's profile.
pub fn match_sighting(
    s: Sighting,
    alerts: &mut BTreeMap<AlertId, Alert>,
    config: &AlertConfig,
) -> Result<Option<SightingMatch>, AlertError> {
    let Some(m) = select_match(&s.plate, alerts.values(), config) else {
        return Ok(None);
    };
    let alert = alerts.get_mut(&m.alert_id).ok_or(AlertError::UnknownAlert(m.alert_id))?;
    // Fuzzy matches are filed under the alert's plate so the profile stays consistent.
    let s = Sighting {
        plate: alert.incident.plate.clone(),
        ..s
    };
    alert.record_sighting(s)?;
    Ok(Some(m))
}

/// Where the target is expected `lead_time_s` after `now`.
pub fn intercept_point(alert: &Alert, now: Millis, config: &AlertConfig) -> Result<GeoPoint, AlertError> {
    let t_last = alert.profile.last().ok_or(TrajectoryError::EmptyProfile)?.t();
    let t = now.max(t_last) + (config.lead_time_s * 1000.0).round() as Millis;
    Ok(project_position(&alert.profile, t, &config.projection)?.position)
}

/// Nearest available unit to the intercept point, ties broken by unit id.
pub fn nearest_available_unit<'a>(
    alert: &Alert,
    units: impl IntoIterator<Item = &'a LeaUnit>,
    now: Millis,
    config: &AlertConfig,
) -> Result<Option<(UnitId, f64)>, AlertError> {
    let target = intercept_point(alert, now, config)?;
    let mut best: Option<(f64, &LeaUnit)> = None;
    for u in units.into_iter().filter(|u| u.is_available()) {
        let d = haversine_distance(&u.position, &target);
        let better = match best {
            None => true,
            Some((bd, bu)) => d < bd || (d == bd && u.unit_id < bu.unit_id),
        };
        if better {
            best = Some((d, u));
        }
    }
    Ok(best.map(|(d, u)| (u.unit_id.clone(), d)))
}

/// Assigns the nearest available unit and moves the alert to `Dispatched`.
/// Returns `None` (and changes nothing) when no unit is free.
pub fn select_dispatch(
    alert: &mut Alert,
    units: &mut BTreeMap<UnitId, LeaUnit>,
    now: Millis,
    config: &AlertConfig,
) -> Result<Option<UnitId>, AlertError> {
    if !matches!(
        alert.state,
        AlertState::VicinityBroadcast | AlertState::CityWideBroadcast
    ) {
        return Err(AlertError::InvalidTransition {
            from: alert.state,
            to: AlertState::Dispatched,
        });
    }
    let Some((unit_id, _)) = nearest_available_unit(alert, units.values(), now, config)? else {
        return Ok(None);
    };
    assign_unit(alert, units, &unit_id, now)?;
    Ok(Some(unit_id))
}

/// Assigns a specific unit.
pub fn assign_unit(
    alert: &mut Alert,
    units: &mut BTreeMap<UnitId, LeaUnit>,
    unit_id: &UnitId,
    now: Millis,
) -> Result<(), AlertError> {
    let unit = units
        .get_mut(unit_id)
        .ok_or_else(|| AlertError::UnknownUnit(unit_id.clone()))?;
    if !unit.is_available() {
        return Err(AlertError::UnitUnavailable(unit_id.clone()));
    }
    alert.mark_dispatched(unit_id.clone(), now)?;
    unit.status = UnitStatus::Dispatched {
        alert_id: alert.alert_id,
    };
    Ok(())
}

/// Closes the alert and frees its unit.
pub fn close_alert(
    alert: &mut Alert,
    units: &mut BTreeMap<UnitId, LeaUnit>,
    now: Millis,
) -> Result<(), AlertError> {
    alert.close(now)?;
    if let Some(unit) = alert.dispatched_unit.as_ref().and_then(|id| units.get_mut(id)) {
        if unit.status == (UnitStatus::Dispatched { alert_id: alert.alert_id }) {
            unit.status = UnitStatus::Available;
        }
    }
    Ok(())
}
