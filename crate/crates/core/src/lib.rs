//! Crowdsourced vehicle tracking.
//!
//! Registered reporters send plate sightings; the service opens alerts,
//! broadcasts them to nearby reporters, widens the broadcast city-wide when
//! nobody responds in time, profiles the offender's movement from matched
//! sightings and sends the nearest law-enforcement unit to where the vehicle
//! is projected to be. A deterministic mobility simulator drives the same
//! pipeline to measure detection probability against crowd density.

pub mod alerting;
pub mod canonical;
pub mod geo;
pub mod registry;
pub mod service;
pub mod sim;
pub mod trajectory;

pub use alerting::{Alert, AlertConfig, AlertId, AlertMessage, AlertState};
pub use geo::{haversine_distance, GeoPoint, Millis, SpatialGrid};
pub use registry::{LeaUnit, PlateId, Registry, ReporterMode, UnitId, UserId, VehicleRecord};
pub use trajectory::{ProjectedPoint, Sighting, SightingSource, TrackProfile};
