//! Per-plate movement profiles and path projection.
//!
//! Velocity comes from independent least-squares lines `x(t)`, `y(t)` fitted
//! to the most recent sightings in a local equirectangular frame centred on
//! the newest sighting. Projection continues from the fitted position along
//! the great circle with the fitted bearing.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{destination_point, haversine_distance, initial_bearing, normalize_bearing, GeoPoint, Millis, EARTH_RADIUS_M};
use crate::registry::{PlateId, UserId};

pub const DEFAULT_WINDOW: usize = 50;
pub const DEFAULT_FIT_WINDOW: usize = 5;

/// Two sightings from the same reporter in the same second closer than this
/// are treated as one.
const DEDUP_DISTANCE_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("PlateMismatch: sighting is for {got}, profile tracks {expected}")]
    PlateMismatch { expected: PlateId, got: PlateId },
    #[error("InvalidSighting: {0}")]
    InvalidSighting(String),
    #[error("InsufficientData: need at least 2 sightings, have {0}")]
    InsufficientData(usize),
    #[error("ZeroTimeSpan: all sightings in the fit window share one timestamp")]
    ZeroTimeSpan,
    #[error("EmptyProfile: no sightings to project from")]
    EmptyProfile,
    #[error("PastTimestamp: {requested} precedes the last sighting at {last}")]
    PastTimestamp { last: Millis, requested: Millis },
    #[error("InvalidHorizon: horizon and step must be positive and finite")]
    InvalidHorizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SightingSource {
    Pedestrian,
    Dashcam,
    FixedCamera,
    Simulator,
}

/// One geolocated, timestamped observation of a plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sighting {
    pub plate: PlateId,
    pub position: GeoPoint,
    pub reporter: UserId,
    pub confidence: f64,
    pub source: SightingSource,
}

impl Sighting {
    pub fn new(
        plate: PlateId,
        position: GeoPoint,
        reporter: UserId,
        confidence: f64,
        source: SightingSource,
    ) -> Result<Self, TrajectoryError> {
        let s = Self {
            plate,
            position,
            reporter,
            confidence,
            source,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(TrajectoryError::InvalidSighting(format!(
                "confidence {} outside [0, 1]",
                self.confidence
            )));
        }
        if self.position.t().is_none() {
            return Err(TrajectoryError::InvalidSighting("missing timestamp".into()));
        }
        Ok(())
    }

    pub fn t(&self) -> Millis {
        self.position.t().unwrap_or_default()
    }

    fn is_duplicate_of(&self, other: &Sighting) -> bool {
        self.reporter == other.reporter
            && self.t().div_euclid(1000) == other.t().div_euclid(1000)
            && haversine_distance(&self.position, &other.position) <= DEDUP_DISTANCE_M
    }
}

// Total order used to keep profiles independent of arrival order.
fn sighting_order(a: &Sighting, b: &Sighting) -> Ordering {
    a.t()
        .cmp(&b.t())
        .then(a.reporter.cmp(&b.reporter))
        .then(a.position.lat().total_cmp(&b.position.lat()))
        .then(a.position.lon().total_cmp(&b.position.lon()))
        .then(a.confidence.total_cmp(&b.confidence))
        .then(a.source.cmp(&b.source))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity {
    pub speed_mps: f64,
    pub bearing_deg: f64,
}

/// Result of the least-squares fit: velocity plus the fitted position at
/// the time of the newest sighting.
///
/// `velocity` is the planar slope. `course` is the tangent, at the anchor, of
/// the great circle through the fitted positions at the window's mean time
/// and at the anchor; projection follows `course`, since the planar heading
/// describes the middle of the window rather than its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub velocity: Velocity,
    pub course: Velocity,
    pub anchor: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionConfig {
    /// Uncertainty radius at zero horizon, metres.
    pub sigma0_m: f64,
    /// Uncertainty growth per second of horizon, metres.
    pub growth_mps: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self {
            sigma0_m: 50.0,
            growth_mps: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub t: Millis,
    pub position: GeoPoint,
    pub uncertainty_radius: f64,
}

/// Time-ordered sightings of one plate, with the current velocity fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackProfile {
    plate: PlateId,
    sightings: Vec<Sighting>,
    window: usize,
    fit_window: usize,
    fit: Option<Fit>,
}

impl TrackProfile {
    pub fn new(plate: PlateId) -> Self {
        Self::with_windows(plate, DEFAULT_WINDOW, DEFAULT_FIT_WINDOW)
    }

    pub fn with_windows(plate: PlateId, window: usize, fit_window: usize) -> Self {
        Self {
            plate,
            sightings: Vec::new(),
            window: window.max(1),
            fit_window: fit_window.max(2),
            fit: None,
        }
    }

    pub fn plate(&self) -> &PlateId {
        &self.plate
    }

    pub fn sightings(&self) -> &[Sighting] {
        &self.sightings
    }

    pub fn len(&self) -> usize {
        self.sightings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sightings.is_empty()
    }

    pub fn last(&self) -> Option<&Sighting> {
        self.sightings.last()
    }

    pub fn fit(&self) -> Option<&Fit> {
        self.fit.as_ref()
    }

    pub fn velocity(&self) -> Option<Velocity> {
        self.fit.map(|f| f.velocity)
    }

    /// Inserts `s` in time order, drops duplicates, trims to the window and
    /// refits the velocity.
    pub fn add_sighting(&mut self, s: Sighting) -> Result<(), TrajectoryError> {
        if s.plate != self.plate {
            return Err(TrajectoryError::PlateMismatch {
                expected: self.plate.clone(),
                got: s.plate,
            });
        }
        s.validate()?;

        let at = self
            .sightings
            .partition_point(|x| sighting_order(x, &s) == Ordering::Less);
        self.sightings.insert(at, s);

        // Greedy dedup in canonical order keeps the result order-independent.
        let mut kept: Vec<Sighting> = Vec::with_capacity(self.sightings.len());
        for s in self.sightings.drain(..) {
            let dup = kept
                .iter()
                .rev()
                .take_while(|k| k.t().div_euclid(1000) == s.t().div_euclid(1000))
                .any(|k| s.is_duplicate_of(k));
            if !dup {
                kept.push(s);
            }
        }
        if kept.len() > self.window {
            kept.drain(..kept.len() - self.window);
        }
        self.sightings = kept;
        self.fit = fit_velocity(&self.sightings, self.fit_window).ok();
        Ok(())
    }

    pub fn estimate_velocity(&self) -> Result<Velocity, TrajectoryError> {
        fit_velocity(&self.sightings, self.fit_window).map(|f| f.velocity)
    }
}

/// Local equirectangular coordinates of `p` about `origin`, metres.
pub fn to_local_plane(origin: &GeoPoint, p: &GeoPoint) -> (f64, f64) {
    let mut dlon = p.lon() - origin.lon();
    if dlon > 180.0 {
        dlon -= 360.0;
    } else if dlon < -180.0 {
        dlon += 360.0;
    }
    let x = EARTH_RADIUS_M * origin.lat().to_radians().cos() * dlon.to_radians();
    let y = EARTH_RADIUS_M * (p.lat() - origin.lat()).to_radians();
    (x, y)
}

pub fn from_local_plane(origin: &GeoPoint, x: f64, y: f64) -> GeoPoint {
    let lat = (origin.lat() + (y / EARTH_RADIUS_M).to_degrees()).clamp(-90.0, 90.0);
    let lon = origin.lon() + (x / (EARTH_RADIUS_M * origin.lat().to_radians().cos())).to_degrees();
    GeoPoint::new(lat, lon).unwrap_or(*origin)
}

/// Central projection onto the plane tangent at `origin`.
struct Gnomonic {
    o: [f64; 3],
    east: [f64; 3],
    north: [f64; 3],
}

fn unit(p: &GeoPoint) -> [f64; 3] {
    let (la, lo) = (p.lat().to_radians(), p.lon().to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl Gnomonic {
    fn new(origin: &GeoPoint) -> Self {
        let (la, lo) = (origin.lat().to_radians(), origin.lon().to_radians());
        Self {
            o: unit(origin),
            east: [-lo.sin(), lo.cos(), 0.0],
            north: [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()],
        }
    }

    fn forward(&self, p: &GeoPoint) -> Option<(f64, f64)> {
        let v = unit(p);
        let c = dot3(&v, &self.o);
        (c > 0.0).then(|| {
            (
                EARTH_RADIUS_M * dot3(&v, &self.east) / c,
                EARTH_RADIUS_M * dot3(&v, &self.north) / c,
            )
        })
    }

    fn inverse(&self, x: f64, y: f64) -> GeoPoint {
        let (u, w) = (x / EARTH_RADIUS_M, y / EARTH_RADIUS_M);
        let v: [f64; 3] = std::array::from_fn(|i| self.o[i] + u * self.east[i] + w * self.north[i]);
        let n = dot3(&v, &v).sqrt();
        let lat = (v[2] / n).clamp(-1.0, 1.0).asin().to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        GeoPoint::new(lat, lon).expect("unit vector maps to a valid coordinate")
    }
}

/// Slope and intercept-at-zero of the least-squares line through `(t, v)`.
fn least_squares(ts: &[f64], vs: &[f64]) -> Option<(f64, f64)> {
    let n = ts.len() as f64;
    let t_mean = ts.iter().sum::<f64>() / n;
    let v_mean = vs.iter().sum::<f64>() / n;
    let mut stt = 0.0;
    let mut stv = 0.0;
    for (t, v) in ts.iter().zip(vs) {
        let dt = t - t_mean;
        stt += dt * dt;
        stv += dt * (v - v_mean);
    }
    if stt == 0.0 {
        return None;
    }
    let slope = stv / stt;
    Some((slope, v_mean - slope * t_mean))
}

/// Fits velocity over the last `fit_window` sightings (time-sorted input).
pub fn fit_velocity(sightings: &[Sighting], fit_window: usize) -> Result<Fit, TrajectoryError> {
    if sightings.len() < 2 {
        return Err(TrajectoryError::InsufficientData(sightings.len()));
    }
    let recent = &sightings[sightings.len().saturating_sub(fit_window.max(2))..];
    let last = recent[recent.len() - 1].position;
    let t_last = last.t().unwrap_or_default();

    let mut ts = Vec::with_capacity(recent.len());
    let mut xs = Vec::with_capacity(recent.len());
    let mut ys = Vec::with_capacity(recent.len());
    for s in recent {
        let (x, y) = to_local_plane(&last, &s.position);
        ts.push((s.t() - t_last) as f64 / 1000.0);
        xs.push(x);
        ys.push(y);
    }
    let (vx, _) = least_squares(&ts, &xs).ok_or(TrajectoryError::ZeroTimeSpan)?;
    let (vy, _) = least_squares(&ts, &ys).ok_or(TrajectoryError::ZeroTimeSpan)?;

    let speed = vx.hypot(vy);
    let bearing = if speed > 0.0 {
        normalize_bearing(vx.atan2(vy).to_degrees())
    } else {
        0.0
    };
    let velocity = Velocity {
        speed_mps: speed,
        bearing_deg: bearing,
    };

    // Second fit in the gnomonic frame, where the track is a straight line.
    let frame = Gnomonic::new(&last);
    let mut gx = Vec::with_capacity(recent.len());
    let mut gy = Vec::with_capacity(recent.len());
    for s in recent {
        let (x, y) = frame.forward(&s.position).ok_or_else(|| TrajectoryError::InvalidSighting("sighting too far from the track".into()))?;
        gx.push(x);
        gy.push(y);
    }
    let (gvx, gx0) = least_squares(&ts, &gx).ok_or(TrajectoryError::ZeroTimeSpan)?;
    let (gvy, gy0) = least_squares(&ts, &gy).ok_or(TrajectoryError::ZeroTimeSpan)?;
    let anchor = frame.inverse(gx0, gy0).with_time(t_last);
    let t_mean = ts.iter().sum::<f64>() / ts.len() as f64;
    let back = frame.inverse(gx0 + gvx * t_mean, gy0 + gvy * t_mean);
    let course = match initial_bearing(&anchor, &back) {
        Ok(b) if speed > 0.0 && t_mean < 0.0 => Velocity {
            speed_mps: haversine_distance(&back, &anchor) / -t_mean,
            bearing_deg: normalize_bearing(b + 180.0),
        },
        _ => Velocity {
            speed_mps: 0.0,
            bearing_deg: 0.0,
        },
    };
    Ok(Fit {
        velocity,
        course,
        anchor,
    })
}

/// Extrapolated position at time `t` (not before the last sighting).
pub fn project_position(
    profile: &TrackProfile,
    t: Millis,
    cfg: &ProjectionConfig,
) -> Result<ProjectedPoint, TrajectoryError> {
    let last = profile.last().ok_or(TrajectoryError::EmptyProfile)?;
    let t_last = last.t();
    if t < t_last {
        return Err(TrajectoryError::PastTimestamp {
            last: t_last,
            requested: t,
        });
    }
    let horizon_s = (t - t_last) as f64 / 1000.0;
    let base = match profile.fit() {
        Some(fit) => destination_point(
            &fit.anchor,
            fit.course.bearing_deg,
            fit.course.speed_mps * horizon_s,
        ),
        None => last.position,
    };
    Ok(ProjectedPoint {
        t,
        position: base.with_time(t),
        uncertainty_radius: cfg.sigma0_m + cfg.growth_mps * horizon_s,
    })
}

/// Samples `project_position` every `step_s` seconds up to `horizon_s`.
pub fn project_path(
    profile: &TrackProfile,
    horizon_s: f64,
    step_s: f64,
    cfg: &ProjectionConfig,
) -> Result<Vec<ProjectedPoint>, TrajectoryError> {
    if !(horizon_s.is_finite() && step_s.is_finite() && horizon_s > 0.0 && step_s > 0.0) {
        return Err(TrajectoryError::InvalidHorizon);
    }
    let t_last = profile.last().ok_or(TrajectoryError::EmptyProfile)?.t();
    let count = (horizon_s / step_s + 1e-9).floor() as u64;
    (1..=count)
        .map(|i| {
            let t = t_last + (i as f64 * step_s * 1000.0).round() as Millis;
            project_position(profile, t, cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::normalize_plate;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn plate() -> PlateId {
        normalize_plate("ABC-123").unwrap()
    }

    fn sighting(lat: f64, lon: f64, t: Millis, reporter: u64) -> Sighting {
        Sighting::new(
            plate(),
            GeoPoint::at(lat, lon, t).unwrap(),
            UserId(reporter),
            0.9,
            SightingSource::Dashcam,
        )
        .unwrap()
    }

    // Normal equations [n Σt; Σt Σt²][a; b] = [Σv; Σtv] solved by Cramer's rule.
    fn normal_equations_slope(ts: &[f64], vs: &[f64]) -> f64 {
        let n = ts.len() as f64;
        let st: f64 = ts.iter().sum();
        let stt: f64 = ts.iter().map(|t| t * t).sum();
        let sv: f64 = vs.iter().sum();
        let stv: f64 = ts.iter().zip(vs).map(|(t, v)| t * v).sum();
        (n * stv - st * sv) / (n * stt - st * st)
    }

    #[test]
    fn first_sighting_has_no_velocity() {
        let mut p = TrackProfile::new(plate());
        p.add_sighting(sighting(33.7, 73.0, 0, 1)).unwrap();
        assert_eq!(p.len(), 1);
        assert!(p.velocity().is_none());
        assert_eq!(p.estimate_velocity(), Err(TrajectoryError::InsufficientData(1)));
    }

    #[test]
    fn rejects_other_plates_and_bad_sightings() {
        let mut p = TrackProfile::new(plate());
        let other = Sighting {
            plate: normalize_plate("XY-9").unwrap(),
            ..sighting(1.0, 1.0, 0, 1)
        };
        assert!(matches!(p.add_sighting(other), Err(TrajectoryError::PlateMismatch { .. })));
        let bad = Sighting {
            confidence: 1.2,
            ..sighting(1.0, 1.0, 0, 1)
        };
        assert!(matches!(p.add_sighting(bad), Err(TrajectoryError::InvalidSighting(_))));
        assert!(p.is_empty());
    }

    #[test]
    fn out_of_order_arrival_stays_sorted() {
        let mut p = TrackProfile::new(plate());
        for t in [5_000, 1_000, 3_000, 2_000] {
            p.add_sighting(sighting(33.7, 73.0 + t as f64 * 1e-7, t, 1)).unwrap();
        }
        let ts: Vec<_> = p.sightings().iter().map(Sighting::t).collect();
        assert_eq!(ts, vec![1_000, 2_000, 3_000, 5_000]);
    }

    #[test]
    fn duplicates_dropped_and_window_trimmed() {
        let mut p = TrackProfile::with_windows(plate(), 3, 2);
        p.add_sighting(sighting(33.7, 73.0, 1_000, 1)).unwrap();
        // Same reporter, same second, ~0.1 m away.
        p.add_sighting(sighting(33.700001, 73.0, 1_500, 1)).unwrap();
        assert_eq!(p.len(), 1);
        // Different reporter is kept.
        p.add_sighting(sighting(33.700001, 73.0, 1_500, 2)).unwrap();
        assert_eq!(p.len(), 2);
        for t in 2..6 {
            p.add_sighting(sighting(33.7, 73.0, t * 1_000, 1)).unwrap();
        }
        assert_eq!(p.len(), 3);
        assert_eq!(p.sightings()[0].t(), 3_000);
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut ss: Vec<Sighting> = (0..10)
                .map(|_| {
                    sighting(
                        33.7 + rng.random_range(-0.01..0.01),
                        73.0 + rng.random_range(-0.01..0.01),
                        rng.random_range(0..20) * 500,
                        rng.random_range(1..4),
                    )
                })
                .collect();
            let mut in_order = TrackProfile::new(plate());
            let mut sorted = ss.clone();
            sorted.sort_by(sighting_order);
            for s in sorted {
                in_order.add_sighting(s).unwrap();
            }
            ss.shuffle(&mut rng);
            let mut shuffled = TrackProfile::new(plate());
            for s in ss {
                shuffled.add_sighting(s).unwrap();
            }
            assert_eq!(in_order, shuffled);
        }
    }

    #[test]
    fn two_point_northward_fit() {
        let a = GeoPoint::at(33.0, 73.0, 0).unwrap();
        let b = destination_point(&a, 0.0, 1_000.0).with_time(100_000);
        let mut p = TrackProfile::new(plate());
        p.add_sighting(Sighting::new(plate(), a, UserId(1), 1.0, SightingSource::Dashcam).unwrap())
            .unwrap();
        p.add_sighting(Sighting::new(plate(), b, UserId(1), 1.0, SightingSource::Dashcam).unwrap())
            .unwrap();
        let v = p.estimate_velocity().unwrap();
        assert!((v.speed_mps - 10.0).abs() < 1e-9, "{v:?}");
        assert!(v.bearing_deg.abs() < 1e-9 || (v.bearing_deg - 360.0).abs() < 1e-9);
    }

    #[test]
    fn zero_time_span() {
        let mut p = TrackProfile::new(plate());
        p.add_sighting(sighting(33.7, 73.0, 1_000, 1)).unwrap();
        p.add_sighting(sighting(33.8, 73.0, 1_000, 2)).unwrap();
        assert_eq!(p.estimate_velocity(), Err(TrajectoryError::ZeroTimeSpan));
        assert!(p.velocity().is_none());
    }

    #[test]
    fn collinear_constant_speed_is_exact() {
        // Due east along the equator keeps the equirectangular frame exact.
        let v = 17.5;
        let mut p = TrackProfile::new(plate());
        for i in 0..5 {
            let pos = destination_point(&GeoPoint::new(0.0, 10.0).unwrap(), 90.0, v * 10.0 * i as f64);
            p.add_sighting(sighting(pos.lat(), pos.lon(), i * 10_000, 1)).unwrap();
        }
        let got = p.estimate_velocity().unwrap();
        assert!(((got.speed_mps - v) / v).abs() < 1e-9, "{got:?}");
    }

    #[test]
    fn slope_matches_normal_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let mut p = TrackProfile::new(plate());
            for i in 0..5 {
                p.add_sighting(sighting(
                    33.7 + rng.random_range(-0.01..0.01),
                    73.0 + rng.random_range(-0.01..0.01),
                    i * 7_000 + rng.random_range(0..3_000),
                    1,
                ))
                .unwrap();
            }
            let last = p.last().unwrap().position;
            let t_last = last.t().unwrap();
            let (ts, (xs, ys)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = p
                .sightings()
                .iter()
                .map(|s| ((s.t() - t_last) as f64 / 1000.0, to_local_plane(&last, &s.position)))
                .unzip();
            let vx = normal_equations_slope(&ts, &xs);
            let vy = normal_equations_slope(&ts, &ys);
            let v = p.estimate_velocity().unwrap();
            let want = vx.hypot(vy);
            assert!(((v.speed_mps - want) / want).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_anchor_and_fallback() {
        let cfg = ProjectionConfig::default();
        let mut p = TrackProfile::new(plate());
        assert_eq!(project_position(&p, 0, &cfg), Err(TrajectoryError::EmptyProfile));
        p.add_sighting(sighting(33.7, 73.0, 10_000, 1)).unwrap();
        let at = project_position(&p, 70_000, &cfg).unwrap();
        assert!(at.position.same_position(&p.last().unwrap().position));
        assert_eq!(at.uncertainty_radius, 50.0 + 60.0 * 5.0);
        assert!(matches!(
            project_position(&p, 9_999, &cfg),
            Err(TrajectoryError::PastTimestamp { .. })
        ));

        p.add_sighting(sighting(33.71, 73.0, 20_000, 1)).unwrap();
        let zero = project_position(&p, 20_000, &cfg).unwrap();
        assert_eq!(zero.uncertainty_radius, 50.0);
        assert_eq!(zero.position, p.fit().unwrap().anchor);
    }

    #[test]
    fn path_sampling() {
        let cfg = ProjectionConfig::default();
        let mut p = TrackProfile::new(plate());
        p.add_sighting(sighting(33.7, 73.0, 0, 1)).unwrap();
        p.add_sighting(sighting(33.71, 73.01, 30_000, 1)).unwrap();
        assert_eq!(project_path(&p, 60.0, 60.0, &cfg).unwrap().len(), 1);
        let path = project_path(&p, 300.0, 60.0, &cfg).unwrap();
        assert_eq!(path.len(), 5);
        for w in path.windows(2) {
            assert!(w[1].uncertainty_radius > w[0].uncertainty_radius);
        }
        for pt in &path {
            assert_eq!(*pt, project_position(&p, pt.t, &cfg).unwrap());
        }
        assert_eq!(project_path(&p, 0.0, 60.0, &cfg), Err(TrajectoryError::InvalidHorizon));
        assert_eq!(project_path(&p, 10.0, -1.0, &cfg), Err(TrajectoryError::InvalidHorizon));
    }

    #[test]
    fn time_shift_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base: Vec<(f64, f64, Millis)> = (0..5)
            .map(|i| {
                (
                    33.7 + rng.random_range(-0.01..0.01),
                    73.0 + rng.random_range(-0.01..0.01),
                    i * 10_000,
                )
            })
            .collect();
        let build = |shift: Millis| {
            let mut p = TrackProfile::new(plate());
            for &(la, lo, t) in &base {
                p.add_sighting(sighting(la, lo, t + shift, 1)).unwrap();
            }
            p.estimate_velocity().unwrap()
        };
        let a = build(0);
        let b = build(1_700_000_000_000);
        assert!(((a.speed_mps - b.speed_mps) / a.speed_mps).abs() < 1e-9);
        assert!((a.bearing_deg - b.bearing_deg).abs() < 1e-9);
    }
}
