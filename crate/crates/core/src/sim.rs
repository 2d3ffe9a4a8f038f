//! Time-stepped crowd mobility simulation driven through the real service.
//!
//! Entities live on a local plane (metres east/north of the arena center).
//! Each entity draws from its own ChaCha8 substream of the scenario seed, so
//! adding crowd points never changes what the existing ones do.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alerting::{AlertId, CityBoundary};
use crate::geo::{GeoPoint, Millis};
use crate::registry::{ReporterMode, UnitId, UserId};
use crate::service::{
    DispatchOutcome, Service, ServiceConfig, ServiceError, SightingOutcome, UnitConfig,
};
use crate::trajectory::{from_local_plane, project_position, to_local_plane};

/// Simulation time zero on the service clock.
pub const EPOCH_MS: Millis = 1_700_000_000_000;
pub const SIM_PLATE: &str = "SIM-001";

const OFFENDER_STREAM: u64 = 0;
const POINT_STREAM_BASE: u64 = 16;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("InvalidScenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("Io: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedRange {
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arena {
    pub center: GeoPoint,
    pub radius_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub arena: Arena,
    pub n_points: usize,
    pub point_speed: SpeedRange,
    pub offender_speed: f64,
    pub sensing_radius: f64,
    pub detect_prob: f64,
    pub snapshot_interval: f64,
    pub step: f64,
    pub horizon: f64,
    pub capture_radius: f64,
    pub seed: u64,
    /// Law-enforcement units, stationed evenly on a ring at half the arena radius.
    pub n_units: usize,
    pub unit_speed_factor: f64,
    /// Seconds between crowd location reports.
    pub location_interval: f64,
    /// Maximum heading change per second of the offender's walk, degrees.
    pub offender_turn_rate: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            arena: Arena {
                center: GeoPoint::new(33.6844, 73.0479).expect("valid arena center"),
                radius_m: 15_000.0,
            },
            n_points: 100,
            point_speed: SpeedRange { min: 1.0, max: 15.0 },
            offender_speed: 15.0,
            sensing_radius: 50.0,
            detect_prob: 0.9,
            snapshot_interval: 10.0,
            step: 1.0,
            horizon: 1_800.0,
            capture_radius: 100.0,
            seed: 0,
            n_units: 4,
            unit_speed_factor: 1.5,
            location_interval: 60.0,
            offender_turn_rate: 10.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidScenario(what.to_owned()));
        let positive = [
            ("arena radius", self.arena.radius_m),
            ("offender speed", self.offender_speed),
            ("sensing radius", self.sensing_radius),
            ("snapshot interval", self.snapshot_interval),
            ("step", self.step),
            ("horizon", self.horizon),
            ("capture radius", self.capture_radius),
            ("unit speed factor", self.unit_speed_factor),
            ("location interval", self.location_interval),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.point_speed.min > 0.0 && self.point_speed.min <= self.point_speed.max && self.point_speed.max.is_finite()) {
            return bad("point speed range must satisfy 0 < min <= max");
        }
        if !(0.0..=1.0).contains(&self.detect_prob) {
            return bad("detect_prob must be in [0, 1]");
        }
        if !(self.offender_turn_rate.is_finite() && self.offender_turn_rate >= 0.0) {
            return bad("offender turn rate must be non-negative");
        }
        if self.arena.center.validated().is_err() {
            return bad("arena center is not a valid coordinate");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let sc: Self = serde_json::from_str(text).map_err(|e| SimError::InvalidScenario(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Io(e.to_string()))?;
        Self::from_json(&text)
    }

    fn service_config(&self) -> ServiceConfig {
        let mut cfg = ServiceConfig {
            salt: format!("sim-{}", self.seed),
            // Replays only need the log, not periodic digests.
            checkpoint_every: 0,
            ..ServiceConfig::default()
        };
        cfg.alert.city = CityBoundary {
            center: self.arena.center,
            radius_m: cfg.alert.city.radius_m.max(self.arena.radius_m),
        };
        cfg.units = (0..self.n_units)
            .map(|i| {
                let (x, y) = unit_station(self, i);
                UnitConfig {
                    unit_id: format!("unit-{i:02}"),
                    position: self.to_geo(x, y),
                }
            })
            .collect();
        cfg
    }

    fn to_geo(&self, x: f64, y: f64) -> GeoPoint {
        from_local_plane(&self.arena.center, x, y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub detected: bool,
    pub t_first_detection: Option<f64>,
    pub n_sightings: u64,
    pub captured: bool,
    pub t_capture: Option<f64>,
}

/// A finished run with the service it drove, event log included.
#[derive(Debug)]
pub struct SimRun {
    pub metrics: SimMetrics,
    pub service: Service,
    pub alert_id: AlertId,
}

type P = (f64, f64);

fn dist(a: P, b: P) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn uniform_in_disc(rng: &mut ChaCha8Rng, r: f64) -> P {
    let rho = r * rng.random::<f64>().sqrt();
    let th = rng.random_range(0.0..std::f64::consts::TAU);
    (rho * th.cos(), rho * th.sin())
}

fn clamp_to_disc(p: P, r: f64) -> P {
    let d = p.0.hypot(p.1);
    if d <= r {
        p
    } else {
        (p.0 * r / d, p.1 * r / d)
    }
}

fn unit_station(sc: &Scenario, i: usize) -> P {
    let th = std::f64::consts::TAU * i as f64 / sc.n_units.max(1) as f64;
    let r = 0.5 * sc.arena.radius_m;
    (r * th.sin(), r * th.cos())
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random-waypoint walker.
struct Point {
    rng: ChaCha8Rng,
    pos: P,
    target: P,
    speed: f64,
    user: UserId,
    alerted: bool,
}

impl Point {
    fn new(sc: &Scenario, index: usize) -> Self {
        let mut rng = substream(sc.seed, POINT_STREAM_BASE + index as u64);
        let pos = uniform_in_disc(&mut rng, sc.arena.radius_m);
        let target = uniform_in_disc(&mut rng, sc.arena.radius_m);
        let speed = rng.random_range(sc.point_speed.min..=sc.point_speed.max);
        Self {
            rng,
            pos,
            target,
            speed,
            user: UserId(0),
            alerted: false,
        }
    }

    fn advance(&mut self, sc: &Scenario, dt: f64) {
        let mut budget = self.speed * dt;
        while budget > 0.0 {
            let d = dist(self.pos, self.target);
            if d > budget {
                let f = budget / d;
                self.pos = (
                    self.pos.0 + (self.target.0 - self.pos.0) * f,
                    self.pos.1 + (self.target.1 - self.pos.1) * f,
                );
                break;
            }
            budget -= d;
            self.pos = self.target;
            self.target = uniform_in_disc(&mut self.rng, sc.arena.radius_m);
            self.speed = self.rng.random_range(sc.point_speed.min..=sc.point_speed.max);
        }
        // The segment between two disc points stays in the disc; this only absorbs rounding.
        self.pos = clamp_to_disc(self.pos, sc.arena.radius_m);
    }
}

/// Random-heading walk that reflects off the arena boundary.
struct Offender {
    rng: ChaCha8Rng,
    pos: P,
    /// Radians clockwise from north.
    heading: f64,
}

impl Offender {
    fn new(sc: &Scenario) -> Self {
        let mut rng = substream(sc.seed, OFFENDER_STREAM);
        let pos = uniform_in_disc(&mut rng, sc.arena.radius_m);
        let heading = rng.random_range(0.0..std::f64::consts::TAU);
        Self { rng, pos, heading }
    }

    fn advance(&mut self, sc: &Scenario, dt: f64) {
        let turn = (sc.offender_turn_rate * dt).to_radians();
        if turn > 0.0 {
            self.heading += self.rng.random_range(-turn..=turn);
        }
        let s = sc.offender_speed * dt;
        let mut next = (self.pos.0 + s * self.heading.sin(), self.pos.1 + s * self.heading.cos());
        let r = sc.arena.radius_m;
        let d = next.0.hypot(next.1);
        if d > r {
            // Mirror the overshoot back inside and reflect the heading about the radial normal.
            let (nx, ny) = (next.0 / d, next.1 / d);
            let back = d - r;
            next = (next.0 - 2.0 * back * nx, next.1 - 2.0 * back * ny);
            let (vx, vy) = (self.heading.sin(), self.heading.cos());
            let dot = vx * nx + vy * ny;
            let (rx, ry) = (vx - 2.0 * dot * nx, vy - 2.0 * dot * ny);
            self.heading = rx.atan2(ry);
            next = clamp_to_disc(next, r);
        }
        self.pos = next;
    }
}

struct Unit {
    id: UnitId,
    pos: P,
}

fn millis(t: f64) -> Millis {
    EPOCH_MS + (t * 1000.0).round() as Millis
}

/// Runs the scenario and returns only its metrics.
pub fn run_scenario(sc: &Scenario) -> Result<SimMetrics, SimError> {
    simulate(sc).map(|r| r.metrics)
}

/// Optional per-step observer, used by tests to check containment.
pub type Observer<'a> = dyn FnMut(f64, &[P], P, &[P]) + 'a;

pub fn simulate(sc: &Scenario) -> Result<SimRun, SimError> {
    simulate_observed(sc, &mut |_, _, _, _| {})
}

pub fn simulate_observed(sc: &Scenario, observe: &mut Observer<'_>) -> Result<SimRun, SimError> {
    sc.validate()?;
    let mut svc = Service::in_memory(sc.service_config())?;
    let mut offender = Offender::new(sc);
    let mut points: Vec<Point> = (0..sc.n_points).map(|i| Point::new(sc, i)).collect();
    let mut units: Vec<Unit> = (0..sc.n_units)
        .map(|i| Unit {
            id: UnitId(format!("unit-{i:02}")),
            pos: unit_station(sc, i),
        })
        .collect();

    let t0 = millis(0.0);
    let victim = svc.register("sim-victim", ReporterMode::Pedestrian, t0)?.user_id;
    for (i, p) in points.iter_mut().enumerate() {
        p.user = svc.register(&format!("sim-point-{i}"), ReporterMode::Dashcam, t0)?.user_id;
        svc.update_location(p.user, sc.to_geo(p.pos.0, p.pos.1), t0)?;
    }
    let origin = sc.to_geo(offender.pos.0, offender.pos.1);
    svc.update_location(victim, origin, t0)?;
    let alert_id = svc.report_incident(victim, SIM_PLATE, "vehicle seen leaving the scene", origin, t0)?;

    let mut metrics = SimMetrics {
        detected: false,
        t_first_detection: None,
        n_sightings: 0,
        captured: false,
        t_capture: None,
    };
    let mut chaser: Option<usize> = None;
    let steps = (sc.horizon / sc.step).round() as u64;
    let snap_every = (sc.snapshot_interval / sc.step).round().max(1.0) as u64;
    let loc_every = (sc.location_interval / sc.step).round().max(1.0) as u64;
    let mut point_pos: Vec<P> = Vec::with_capacity(points.len());

    for k in 1..=steps {
        let t = k as f64 * sc.step;
        let now = millis(t);
        offender.advance(sc, sc.step);
        for p in points.iter_mut() {
            p.advance(sc, sc.step);
        }

        if k % loc_every == 0 {
            for p in &points {
                svc.update_location(p.user, sc.to_geo(p.pos.0, p.pos.1), now)?;
            }
        }
        svc.tick(now)?;

        if k % snap_every == 0 {
            for p in points.iter_mut() {
                // Every point draws its coin at every snapshot so streams stay aligned.
                let coin = p.rng.random::<f64>();
                if !p.alerted {
                    p.alerted = svc.state().channel_len(p.user) > 0;
                }
                if p.alerted && coin < sc.detect_prob && dist(p.pos, offender.pos) <= sc.sensing_radius {
                    let here = sc.to_geo(p.pos.0, p.pos.1).with_time(now);
                    let out = svc.submit_sighting(p.user, SIM_PLATE, here, 1.0, now)?;
                    if matches!(out, SightingOutcome::Matched { .. }) {
                        metrics.n_sightings += 1;
                        if !metrics.detected {
                            metrics.detected = true;
                            metrics.t_first_detection = Some(t);
                        }
                    }
                }
            }
            if metrics.detected && chaser.is_none() {
                if let DispatchOutcome::Dispatched { unit_id } = svc.dispatch(alert_id, None, now)? {
                    chaser = units.iter().position(|u| u.id == unit_id);
                }
            }
        }

        if let Some(ci) = chaser {
            let alert = &svc.state().alerts()[&alert_id];
            let estimate = project_position(&alert.profile, now, &svc.config().alert.projection)
                .map_err(ServiceError::from)?
                .position;
            let target = clamp_to_disc(to_local_plane(&sc.arena.center, &estimate), sc.arena.radius_m);
            let unit = &mut units[ci];
            let reach = sc.unit_speed_factor * sc.offender_speed * sc.step;
            let d = dist(unit.pos, target);
            unit.pos = if d <= reach {
                target
            } else {
                (
                    unit.pos.0 + (target.0 - unit.pos.0) * reach / d,
                    unit.pos.1 + (target.1 - unit.pos.1) * reach / d,
                )
            };
            if dist(unit.pos, offender.pos) <= sc.capture_radius {
                metrics.captured = true;
                metrics.t_capture = Some(t);
                svc.close(alert_id, now)?;
            }
        }

        point_pos.clear();
        point_pos.extend(points.iter().map(|p| p.pos));
        let unit_pos: Vec<P> = units.iter().map(|u| u.pos).collect();
        observe(t, &point_pos, offender.pos, &unit_pos);
        if metrics.captured {
            break;
        }
    }

    Ok(SimRun {
        metrics,
        service: svc,
        alert_id,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub p_detect: f64,
    /// Sample standard deviation of the per-run detection indicator.
    pub sd_detect: f64,
    /// Mean first-detection time over runs that detected.
    pub t_first_mean: Option<f64>,
    pub capture_rate: f64,
}

/// Seed of run `run` in a sweep. The same seeds are reused for every `n`,
/// so curves compare like with like.
pub fn run_seed(seed0: u64, run: usize) -> u64 {
    seed0.wrapping_add(run as u64)
}

pub fn aggregate(n: usize, runs: &[SimMetrics]) -> SweepRow {
    let k = runs.len() as f64;
    let hits: Vec<f64> = runs.iter().map(|m| if m.detected { 1.0 } else { 0.0 }).collect();
    let p = hits.iter().sum::<f64>() / k;
    let sd = if runs.len() > 1 {
        (hits.iter().map(|h| (h - p).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    let firsts: Vec<f64> = runs.iter().filter_map(|m| m.t_first_detection).collect();
    let t_first_mean = (!firsts.is_empty()).then(|| firsts.iter().sum::<f64>() / firsts.len() as f64);
    let capture_rate = runs.iter().filter(|m| m.captured).count() as f64 / k;
    SweepRow {
        n,
        p_detect: p,
        sd_detect: sd,
        t_first_mean,
        capture_rate,
    }
}

/// Per-run metrics for every `n`, in `n` then run order.
pub fn sweep_runs(
    base: &Scenario,
    n_values: &[usize],
    runs_per_n: usize,
    seed0: u64,
) -> Result<Vec<(usize, Vec<SimMetrics>)>, SimError> {
    if runs_per_n == 0 {
        return Err(SimError::InvalidScenario("runs_per_n must be at least 1".into()));
    }
    base.validate()?;
    let jobs: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..runs_per_n).map(move |r| (n, r)))
        .collect();
    let results: Vec<SimMetrics> = jobs
        .par_iter()
        .map(|&(n, r)| {
            let sc = Scenario {
                n_points: n,
                seed: run_seed(seed0, r),
                ..base.clone()
            };
            run_scenario(&sc)
        })
        .collect::<Result<_, _>>()?;
    Ok(n_values
        .iter()
        .zip(results.chunks(runs_per_n))
        .map(|(&n, chunk)| (n, chunk.to_vec()))
        .collect())
}

pub fn sweep(
    base: &Scenario,
    n_values: &[usize],
    runs_per_n: usize,
    seed0: u64,
) -> Result<Vec<SweepRow>, SimError> {
    Ok(sweep_runs(base, n_values, runs_per_n, seed0)?
        .iter()
        .map(|(n, runs)| aggregate(*n, runs))
        .collect())
}

pub const CSV_HEADER: &str = "n,p_detect,sd_detect,t_first_mean,capture_rate";

pub fn write_csv(table: &[SweepRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in table {
        let t = r.t_first_mean.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{},{}", r.n, r.p_detect, r.sd_detect, t, r.capture_rate)?;
    }
    Ok(())
}

pub fn emit_csv(table: &[SweepRow], path: impl AsRef<Path>) -> Result<(), SimError> {
    let file = std::fs::File::create(path).map_err(|e| SimError::Io(e.to_string()))?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(table, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| SimError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::service::EventKind;

    fn small(n: usize, seed: u64) -> Scenario {
        Scenario {
            n_points: n,
            seed,
            horizon: 600.0,
            ..Scenario::default()
        }
    }

    #[test]
    fn nobody_can_see() {
        let m = run_scenario(&small(0, 1)).unwrap();
        assert!(!m.detected);
        assert_eq!(m.n_sightings, 0);
        assert!(!m.captured);
    }

    #[test]
    fn full_coverage_detects_at_first_snapshot() {
        let sc = Scenario {
            sensing_radius: 30_001.0,
            detect_prob: 1.0,
            ..small(5, 2)
        };
        let m = run_scenario(&sc).unwrap();
        assert!(m.detected);
        assert!(m.t_first_detection.unwrap() <= sc.snapshot_interval);
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let sc = small(200, 3);
        let a = simulate(&sc).unwrap();
        let b = simulate(&sc).unwrap();
        assert_eq!(
            serde_json::to_string(&a.metrics).unwrap(),
            serde_json::to_string(&b.metrics).unwrap()
        );
        assert_eq!(a.service.events(), b.service.events());
        assert_eq!(a.service.digest(), b.service.digest());
    }

    #[test]
    fn entities_stay_in_the_arena() {
        let sc = Scenario {
            arena: Arena {
                radius_m: 800.0,
                ..Scenario::default().arena
            },
            offender_speed: 40.0,
            ..small(30, 4)
        };
        let r = sc.arena.radius_m + 1e-6;
        let mut steps = 0;
        simulate_observed(&sc, &mut |_, pts, off, units| {
            steps += 1;
            assert!(off.0.hypot(off.1) <= r);
            assert!(pts.iter().chain(units).all(|p| p.0.hypot(p.1) <= r));
        })
        .unwrap();
        assert!(steps > 0);
    }

    #[test]
    fn capture_follows_dispatch() {
        let mut captured = 0;
        for seed in 0..8 {
            let sc = Scenario {
                sensing_radius: 2_000.0,
                detect_prob: 1.0,
                ..Scenario { seed, n_points: 300, ..Scenario::default() }
            };
            let run = simulate(&sc).unwrap();
            let Some(t_capture) = run.metrics.t_capture else {
                assert!(!run.metrics.captured);
                continue;
            };
            captured += 1;
            assert!(run.metrics.detected);
            assert!(run.metrics.t_first_detection.unwrap() <= t_capture);
            let dispatched = run
                .service
                .events()
                .iter()
                .find(|e| matches!(e.kind, EventKind::UnitDispatched { .. }))
                .expect("dispatch event");
            assert!(dispatched.at <= millis(t_capture));
            let closed = run.service.events().last().unwrap();
            assert!(matches!(closed.kind, EventKind::AlertClosed { .. }));
            assert_eq!(closed.at, millis(t_capture));
        }
        assert!(captured > 0);
    }

    #[test]
    fn more_points_never_lose_coverage() {
        for seed in 0..4 {
            let base = Scenario {
                detect_prob: 1.0,
                sensing_radius: 400.0,
                ..small(0, seed)
            };
            let mut prev: Option<f64> = None;
            for n in [20, 60, 120, 240] {
                let m = run_scenario(&Scenario { n_points: n, ..base.clone() }).unwrap();
                if let Some(p) = prev {
                    let t = m.t_first_detection.expect("superset of a detecting crowd must detect");
                    assert!(t <= p, "n={n}: {t} > {p}");
                }
                prev = m.t_first_detection.or(prev);
            }
        }
    }

    #[test]
    fn aggregation_matches_hand_arithmetic() {
        let base = small(0, 0);
        let table = sweep_runs(&base, &[10, 40], 3, 7).unwrap();
        for (n, runs) in &table {
            assert_eq!(runs.len(), 3);
            for (r, m) in runs.iter().enumerate() {
                let single = run_scenario(&Scenario { n_points: *n, seed: run_seed(7, r), ..base.clone() }).unwrap();
                assert_eq!(&single, m);
            }
        }
        let rows = sweep(&base, &[10, 40], 3, 7).unwrap();
        assert_eq!(rows.len(), 2);
        let fake = [
            SimMetrics { detected: true, t_first_detection: Some(10.0), n_sightings: 2, captured: true, t_capture: Some(50.0) },
            SimMetrics { detected: false, t_first_detection: None, n_sightings: 0, captured: false, t_capture: None },
            SimMetrics { detected: true, t_first_detection: Some(40.0), n_sightings: 1, captured: false, t_capture: None },
        ];
        let row = aggregate(5, &fake);
        assert_eq!(row.p_detect, 2.0 / 3.0);
        // Sample sd of {1, 0, 1}: sqrt(((1/3)^2 * 2 + (2/3)^2) / 2) = sqrt(1/3).
        assert!((row.sd_detect - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(row.t_first_mean, Some(25.0));
        assert_eq!(row.capture_rate, 1.0 / 3.0);
    }

    #[test]
    fn csv_shape() {
        let rows = vec![
            SweepRow { n: 100, p_detect: 0.5, sd_detect: 0.1, t_first_mean: None, capture_rate: 0.0 },
            SweepRow { n: 200, p_detect: 0.75, sd_detect: 0.2, t_first_mean: Some(12.5), capture_rate: 0.25 },
        ];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "n,p_detect,sd_detect,t_first_mean,capture_rate\n100,0.5,0.1,,0\n200,0.75,0.2,12.5,0.25\n"
        );
    }

    #[test]
    fn scenario_validation_and_json() {
        let sc = Scenario::from_json(r#"{"n_points": 7, "seed": 3}"#).unwrap();
        assert_eq!(sc.n_points, 7);
        assert_eq!(sc.arena.radius_m, 15_000.0);
        assert!(Scenario::from_json(r#"{"detect_prob": 1.5}"#).is_err());
        assert!(Scenario::from_json(r#"{"step": 0}"#).is_err());
        assert!(sweep(&Scenario::default(), &[1], 0, 0).is_err());
    }
}
