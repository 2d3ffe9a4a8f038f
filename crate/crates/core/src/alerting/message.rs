//! Size-bounded alert payloads.

use serde::{Deserialize, Serialize};

use super::{Alert, AlertConfig, AlertError, AlertId, AlertState};
use crate::canonical::to_canonical_string;
use crate::geo::{GeoPoint, Millis};
use crate::registry::{PlateId, VehicleRecord};
use crate::trajectory::{project_position, ProjectedPoint};

/// Appended to a description that had to be shortened.
pub const TRUNCATION_MARKER: &str = "…";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VehicleDetails {
    pub color: String,
    pub make: String,
    pub model: String,
}

impl From<&VehicleRecord> for VehicleDetails {
    fn from(r: &VehicleRecord) -> Self {
        Self {
            color: r.color.clone(),
            make: r.make.clone(),
            model: r.model.clone(),
        }
    }
}

/// What reporters receive about an alert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertMessage {
    pub alert_id: AlertId,
    pub plate: PlateId,
    pub state: AlertState,
    pub description: String,
    pub truncated: bool,
    pub vehicle: Option<VehicleDetails>,
    pub origin: GeoPoint,
    pub reported_at: Millis,
    pub projected: Option<ProjectedPoint>,
}

impl AlertMessage {
    pub fn from_alert(alert: &Alert, vehicle: Option<&VehicleRecord>, config: &AlertConfig) -> Self {
        // Only meaningful once there is a velocity to extrapolate with.
        let projected = alert.profile.fit().and_then(|_| {
            let t_last = alert.profile.last()?.t();
            let t = t_last + (config.lead_time_s * 1000.0).round() as Millis;
            project_position(&alert.profile, t, &config.projection).ok()
        });
        Self {
            alert_id: alert.alert_id,
            plate: alert.incident.plate.clone(),
            state: alert.state,
            description: alert.incident.description.clone(),
            truncated: false,
            vehicle: vehicle.map(VehicleDetails::from),
            origin: alert.incident.origin,
            reported_at: alert.incident.reported_at,
            projected,
        }
    }
}

fn encode(msg: &AlertMessage) -> Result<String, AlertError> {
    to_canonical_string(msg).map_err(|e| AlertError::Decode(e.to_string()))
}

/// Canonical JSON for the alert, never longer than `config.max_payload`.
///
/// An oversized description is cut at a character boundary and suffixed
/// with [`TRUNCATION_MARKER`]. Fails only when the message does not fit even
/// with an empty description.
pub fn encode_alert_message(
    alert: &Alert,
    vehicle: Option<&VehicleRecord>,
    config: &AlertConfig,
) -> Result<Vec<u8>, AlertError> {
    let max = config.max_payload.min(super::MAX_PAYLOAD_LIMIT);
    let mut msg = AlertMessage::from_alert(alert, vehicle, config);
    let full = encode(&msg)?;
    if full.len() <= max {
        return Ok(full.into_bytes());
    }

    let original = std::mem::take(&mut msg.description);
    if original.is_empty() {
        return Err(AlertError::Unencodable {
            needed: full.len(),
            max,
        });
    }
    let boundaries: Vec<usize> = original.char_indices().map(|(i, _)| i).collect();
    msg.truncated = true;
    let fits = |msg: &mut AlertMessage, n: usize| -> Result<Option<String>, AlertError> {
        msg.description = format!("{}{TRUNCATION_MARKER}", &original[..boundaries[n]]);
        let s = encode(msg)?;
        Ok((s.len() <= max).then_some(s))
    };

    // Encoded size grows monotonically with the prefix length.
    let (mut lo, mut hi) = (0usize, boundaries.len() - 1);
    let Some(mut best) = fits(&mut msg, 0)? else {
        msg.description.clear();
        let bare = encode(&msg)?;
        if bare.len() <= max {
            return Ok(bare.into_bytes());
        }
        return Err(AlertError::Unencodable {
            needed: bare.len(),
            max,
        });
    };
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        match fits(&mut msg, mid)? {
            Some(s) => {
                best = s;
                lo = mid;
            }
            None => hi = mid - 1,
        }
    }
    Ok(best.into_bytes())
}

pub fn decode_alert_message(bytes: &[u8]) -> Result<AlertMessage, AlertError> {
    let mut msg: AlertMessage =
        serde_json::from_slice(bytes).map_err(|e| AlertError::Decode(e.to_string()))?;
    msg.origin = msg
        .origin
        .validated()
        .map_err(|e| AlertError::Decode(e.to_string()))?;
    Ok(msg)
}
