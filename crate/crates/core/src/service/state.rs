use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Event, EventKind, ServiceError};
use crate::alerting::{
    assign_unit, close_alert, encode_alert_message, open_incident, Alert, AlertConfig, AlertError,
    AlertId,
};
use crate::canonical::to_canonical_string;
use crate::geo::Millis;
use crate::registry::{LeaUnit, Registry, UnitId, User, UserId, VehicleRecord};
use crate::trajectory::Sighting;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum PushItem {
    /// Canonical JSON of an `AlertMessage`.
    Alert { alert_id: AlertId, payload: String },
    Operator { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Delivery {
    pub seq: u64,
    pub at: Millis,
    pub item: PushItem,
}

/// The fold of the event log.
#[derive(Debug, Clone)]
pub struct State {
    registry: Registry,
    alerts: BTreeMap<AlertId, Alert>,
    vehicles: BTreeMap<AlertId, VehicleRecord>,
    offenders: BTreeMap<AlertId, UserId>,
    units: BTreeMap<UnitId, LeaUnit>,
    /// Every message sent, once; channels index into it.
    outbox: Vec<Delivery>,
    channels: BTreeMap<UserId, Vec<usize>>,
    unmatched: Vec<Sighting>,
    last_seq: u64,
}

#[derive(Serialize)]
struct DigestView<'a> {
    last_seq: u64,
    users: Vec<&'a User>,
    alerts: &'a BTreeMap<AlertId, Alert>,
    vehicles: &'a BTreeMap<AlertId, VehicleRecord>,
    offenders: &'a BTreeMap<AlertId, UserId>,
    units: &'a BTreeMap<UnitId, LeaUnit>,
    outbox: &'a [Delivery],
    channels: &'a BTreeMap<UserId, Vec<usize>>,
    unmatched: &'a [Sighting],
}

impl State {
    pub(super) fn new(salt: &str, units: BTreeMap<UnitId, LeaUnit>) -> Self {
        Self {
            registry: Registry::new(salt),
            alerts: BTreeMap::new(),
            vehicles: BTreeMap::new(),
            offenders: BTreeMap::new(),
            units,
            outbox: Vec::new(),
            channels: BTreeMap::new(),
            unmatched: Vec::new(),
            last_seq: 0,
        }
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn alerts(&self) -> &BTreeMap<AlertId, Alert> {
        &self.alerts
    }

    pub fn units(&self) -> &BTreeMap<UnitId, LeaUnit> {
        &self.units
    }

    pub fn unmatched(&self) -> &[Sighting] {
        &self.unmatched
    }

    pub fn vehicle(&self, alert_id: AlertId) -> Option<&VehicleRecord> {
        self.vehicles.get(&alert_id)
    }

    pub fn offender(&self, alert_id: AlertId) -> Option<UserId> {
        self.offenders.get(&alert_id).copied()
    }

    /// Deliveries queued for `user_id`, oldest first.
    pub fn channel(&self, user_id: UserId) -> impl ExactSizeIterator<Item = &Delivery> + '_ {
        let idx = self.channels.get(&user_id).map(Vec::as_slice).unwrap_or_default();
        idx.iter().map(|&i| &self.outbox[i])
    }

    pub fn channel_len(&self, user_id: UserId) -> usize {
        self.channels.get(&user_id).map_or(0, Vec::len)
    }

    pub fn last_seq(&self) -> u64 {
        self.last_seq
    }

    pub(super) fn next_alert_id(&self) -> AlertId {
        AlertId(self.alerts.keys().next_back().map_or(1, |a| a.0 + 1))
    }

    pub fn digest(&self) -> String {
        let view = DigestView {
            last_seq: self.last_seq,
            users: self.registry.users().collect(),
            alerts: &self.alerts,
            vehicles: &self.vehicles,
            offenders: &self.offenders,
            units: &self.units,
            outbox: &self.outbox,
            channels: &self.channels,
            unmatched: &self.unmatched,
        };
        let json = to_canonical_string(&view).expect("state always serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn alert_mut(&mut self, id: AlertId) -> Result<&mut Alert, ServiceError> {
        Ok(self.alerts.get_mut(&id).ok_or(AlertError::UnknownAlert(id))?)
    }

    fn push_alert(&mut self, seq: u64, at: Millis, alert_id: AlertId, recipients: &[UserId], cfg: &AlertConfig) -> Result<(), ServiceError> {
        let alert = &self.alerts[&alert_id];
        let bytes = encode_alert_message(alert, self.vehicles.get(&alert_id), cfg)?;
        let payload = String::from_utf8(bytes).expect("canonical JSON is UTF-8");
        self.outbox.push(Delivery {
            seq,
            at,
            item: PushItem::Alert { alert_id, payload },
        });
        let i = self.outbox.len() - 1;
        for &user in recipients {
            self.channels.entry(user).or_default().push(i);
        }
        Ok(())
    }

    /// Applies one event. Errors leave the state unchanged.
    pub fn apply(&mut self, e: &Event, cfg: &AlertConfig) -> Result<(), ServiceError> {
        if e.seq != self.last_seq + 1 {
            return Err(ServiceError::LogCorrupt {
                seq: self.last_seq + 1,
                reason: format!("found seq {}", e.seq),
            });
        }
        match &e.kind {
            EventKind::UserRegistered { user } => self.registry.insert_user(user.clone())?,
            EventKind::LocationUpdated { user_id, position } => {
                self.registry.update_location(*user_id, *position)?
            }
            EventKind::IncidentOpened {
                alert_id,
                report,
                vehicle,
                offender,
                recipients,
            } => {
                if self.alerts.contains_key(alert_id) {
                    return Err(ServiceError::InvalidRequest(format!("alert {alert_id} exists")));
                }
                let alert = open_incident(*alert_id, report.clone(), &self.registry, cfg)?;
                encode_alert_message(&alert, vehicle.as_ref(), cfg)?;
                self.alerts.insert(*alert_id, alert);
                if let Some(v) = vehicle {
                    self.vehicles.insert(*alert_id, v.clone());
                }
                if let Some(o) = offender {
                    self.offenders.insert(*alert_id, *o);
                }
                self.push_alert(e.seq, e.at, *alert_id, recipients, cfg)?;
            }
            EventKind::SightingMatched {
                alert_id, sighting, ..
            } => self.alert_mut(*alert_id)?.record_sighting(sighting.clone())?,
            EventKind::SightingUnmatched { sighting } => {
                sighting.validate()?;
                self.unmatched.push(sighting.clone());
            }
            EventKind::AlertEscalated {
                alert_id,
                recipients,
            } => {
                let mut next = self.alert_mut(*alert_id)?.clone();
                next.escalate(e.at)?;
                encode_alert_message(&next, self.vehicles.get(alert_id), cfg)?;
                self.alerts.insert(*alert_id, next);
                self.push_alert(e.seq, e.at, *alert_id, recipients, cfg)?;
            }
            EventKind::UnitDispatched { alert_id, unit_id } => {
                let alert = self.alerts.get_mut(alert_id).ok_or(AlertError::UnknownAlert(*alert_id))?;
                assign_unit(alert, &mut self.units, unit_id, e.at)?;
            }
            EventKind::AlertClosed { alert_id } => {
                let alert = self.alerts.get_mut(alert_id).ok_or(AlertError::UnknownAlert(*alert_id))?;
                close_alert(alert, &mut self.units, e.at)?;
            }
            EventKind::OperatorMessage { user_id, text } => {
                if !self.registry.contains(*user_id) {
                    return Err(crate::registry::RegistryError::UnknownUser(*user_id).into());
                }
                self.outbox.push(Delivery {
                    seq: e.seq,
                    at: e.at,
                    item: PushItem::Operator { text: text.clone() },
                });
                let i = self.outbox.len() - 1;
                self.channels.entry(*user_id).or_default().push(i);
            }
        }
        self.last_seq = e.seq;
        Ok(())
    }
}
