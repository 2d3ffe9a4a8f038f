//! Reporter identities, live reporter positions, the vehicle repository and
//! law-enforcement units.

mod plate;
mod vehicles;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::alerting::AlertId;
use crate::geo::{GeoPoint, Millis, SpatialGrid};

pub use plate::{
    normalize_plate, plate_similarity, weighted_edit_distance, PlateGrammar, PlateId,
    RecognizerStub, DEFAULT_PLATE_PATTERN,
};
pub use vehicles::{FileVehicleRepository, MemoryVehicleRepository, VehicleRecord, VehicleRepository};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("InvalidPlate: {0}")]
    InvalidPlate(String),
    #[error("InvalidGrammar: {0}")]
    InvalidGrammar(String),
    #[error("InvalidConfidence: {0} is outside [0, 1]")]
    InvalidConfidence(f64),
    #[error("EmptyNationalId: national id must not be empty")]
    EmptyNationalId,
    #[error("DuplicateRegistration: national id already registered")]
    DuplicateRegistration,
    #[error("UnknownUser: {0}")]
    UnknownUser(UserId),
    #[error("StaleTimestamp: {got} is older than last position at {last}")]
    StaleTimestamp { last: Millis, got: Millis },
    #[error("MissingTimestamp: location updates must carry a timestamp")]
    MissingTimestamp,
    #[error("NotFound: no vehicle record for {0}")]
    NotFound(PlateId),
    #[error("BackendUnavailable: {0}")]
    BackendUnavailable(String),
    #[error("RepositoryFormat: line {line}: {reason}")]
    RepositoryFormat { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u64);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "u{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReporterMode {
    Pedestrian,
    Dashcam,
    FixedCamera,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct User {
    pub user_id: UserId,
    pub national_id_digest: String,
    pub mode: ReporterMode,
    pub last_position: Option<GeoPoint>,
    pub registered_at: Millis,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitId(pub String);

impl fmt::Display for UnitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum UnitStatus {
    Available,
    Dispatched { alert_id: AlertId },
}

/// A law-enforcement unit that can be sent after an offender.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaUnit {
    pub unit_id: UnitId,
    pub position: GeoPoint,
    pub status: UnitStatus,
}

impl LeaUnit {
    pub fn available(unit_id: impl Into<String>, position: GeoPoint) -> Self {
        Self {
            unit_id: UnitId(unit_id.into()),
            position,
            status: UnitStatus::Available,
        }
    }

    pub fn is_available(&self) -> bool {
        self.status == UnitStatus::Available
    }
}

/// Registered reporters and where they last were.
///
/// National ids are never stored; only a salted SHA-256 digest is kept, and
/// a digest maps to at most one account.
#[derive(Debug, Clone)]
pub struct Registry {
    salt: String,
    users: BTreeMap<UserId, User>,
    by_digest: HashMap<String, UserId>,
    grid: SpatialGrid<UserId>,
    next_id: u64,
}

impl Default for Registry {
    fn default() -> Self {
        Self::new("")
    }
}

impl Registry {
    pub fn new(salt: impl Into<String>) -> Self {
        Self {
            salt: salt.into(),
            users: BTreeMap::new(),
            by_digest: HashMap::new(),
            grid: SpatialGrid::default(),
            next_id: 1,
        }
    }

    pub fn digest_national_id(&self, national_id: &str) -> String {
        let mut h = Sha256::new();
        h.update(self.salt.as_bytes());
        h.update([0u8]);
        h.update(national_id.trim().as_bytes());
        hex::encode(h.finalize())
    }

    /// Builds the user a registration would create, without storing it.
    pub fn prepare_user(
        &self,
        national_id: &str,
        mode: ReporterMode,
        at: Millis,
    ) -> Result<User, RegistryError> {
        if national_id.trim().is_empty() {
            return Err(RegistryError::EmptyNationalId);
        }
        let digest = self.digest_national_id(national_id);
        if self.by_digest.contains_key(&digest) {
            return Err(RegistryError::DuplicateRegistration);
        }
        Ok(User {
            user_id: UserId(self.next_id),
            national_id_digest: digest,
            mode,
            last_position: None,
            registered_at: at,
        })
    }

    /// Stores a prepared user. Ids must be fresh and digests unique.
    pub fn insert_user(&mut self, user: User) -> Result<(), RegistryError> {
        if self.by_digest.contains_key(&user.national_id_digest)
            || self.users.contains_key(&user.user_id)
        {
            return Err(RegistryError::DuplicateRegistration);
        }
        self.next_id = self.next_id.max(user.user_id.0 + 1);
        self.by_digest.insert(user.national_id_digest.clone(), user.user_id);
        if let Some(p) = user.last_position {
            self.grid.insert(user.user_id, p);
        }
        self.users.insert(user.user_id, user);
        Ok(())
    }

    pub fn register_user(
        &mut self,
        national_id: &str,
        mode: ReporterMode,
        at: Millis,
    ) -> Result<User, RegistryError> {
        let user = self.prepare_user(national_id, mode, at)?;
        self.insert_user(user.clone())?;
        Ok(user)
    }

    pub fn set_mode(&mut self, user_id: UserId, mode: ReporterMode) -> Result<(), RegistryError> {
        self.users
            .get_mut(&user_id)
            .ok_or(RegistryError::UnknownUser(user_id))?
            .mode = mode;
        Ok(())
    }

    /// Validates a location update without applying it.
    pub fn check_location(&self, user_id: UserId, p: &GeoPoint) -> Result<(), RegistryError> {
        let user = self.users.get(&user_id).ok_or(RegistryError::UnknownUser(user_id))?;
        let t = p.t().ok_or(RegistryError::MissingTimestamp)?;
        if let Some(last) = user.last_position.and_then(|lp| lp.t()) {
            if t < last {
                return Err(RegistryError::StaleTimestamp { last, got: t });
            }
        }
        Ok(())
    }

    pub fn update_location(&mut self, user_id: UserId, p: GeoPoint) -> Result<(), RegistryError> {
        self.check_location(user_id, &p)?;
        if let Some(user) = self.users.get_mut(&user_id) {
            user.last_position = Some(p);
        }
        self.grid.insert(user_id, p);
        Ok(())
    }

    pub fn user(&self, user_id: UserId) -> Option<&User> {
        self.users.get(&user_id)
    }

    pub fn contains(&self, user_id: UserId) -> bool {
        self.users.contains_key(&user_id)
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    /// The account registered under a raw national id, if any.
    pub fn user_for_national_id(&self, national_id: &str) -> Option<UserId> {
        if national_id.trim().is_empty() {
            return None;
        }
        self.by_digest.get(&self.digest_national_id(national_id)).copied()
    }

    /// Users whose last known position lies within `radius_m` of `center`.
    pub fn users_within(&self, center: &GeoPoint, radius_m: f64) -> BTreeSet<UserId> {
        self.grid.query_radius(center, radius_m)
    }

    pub fn lookup_vehicle(
        &self,
        repo: &dyn VehicleRepository,
        plate: &PlateId,
    ) -> Result<VehicleRecord, RegistryError> {
        repo.lookup(plate)
    }
}
