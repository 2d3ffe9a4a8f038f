//! Spherical geodesy and a uniform lat/lon grid for radius queries.
//!
//! All distances are great-circle distances on a sphere of radius
//! [`EARTH_RADIUS_M`]. At the scales this crate works with (tens of
//! kilometres) the spherical model is well inside GPS noise.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in metres.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Milliseconds since the Unix epoch.
pub type Millis = i64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("InvalidCoordinate: lat={lat} lon={lon}")]
    InvalidCoordinate { lat: f64, lon: f64 },
    #[error("DegenerateInput: bearing between coincident points is undefined")]
    DegenerateInput,
    #[error("UnknownEntity: no grid entry for the given id")]
    UnknownEntity,
}

/// A WGS-84 position, optionally stamped with a time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<Millis>,
}

impl GeoPoint {
    /// Latitude must lie in `[-90, 90]`; longitude is wrapped into `(-180, 180]`.
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidCoordinate { lat, lon });
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
            t: None,
        })
    }

    pub fn at(lat: f64, lon: f64, t: Millis) -> Result<Self, GeoError> {
        Self::new(lat, lon).map(|p| p.with_time(t))
    }

    pub fn with_time(mut self, t: Millis) -> Self {
        self.t = Some(t);
        self
    }

    pub fn without_time(mut self) -> Self {
        self.t = None;
        self
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn t(&self) -> Option<Millis> {
        self.t
    }

    /// Same position, ignoring timestamps.
    pub fn same_position(&self, other: &GeoPoint) -> bool {
        self.lat == other.lat && self.lon == other.lon
    }

    // Re-validates after deserialization, which bypasses `new`.
    pub(crate) fn validated(self) -> Result<Self, GeoError> {
        let p = Self::new(self.lat, self.lon)?;
        Ok(Self { t: self.t, ..p })
    }
}

/// Wraps a longitude in degrees into `(-180, 180]`.
pub fn normalize_lon(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l <= -180.0 {
        l += 360.0;
    } else if l > 180.0 {
        l -= 360.0;
    }
    l
}

fn wrap_radians(mut d: f64) -> f64 {
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

/// Great-circle distance in metres.
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = wrap_radians(b.lon.to_radians() - a.lon.to_radians());

    let s_phi = (dphi * 0.5).sin();
    let s_lambda = (dlambda * 0.5).sin();
    let h = s_phi * s_phi + phi1.cos() * phi2.cos() * s_lambda * s_lambda;
    let h = h.clamp(0.0, 1.0);
    2.0 * EARTH_RADIUS_M * h.sqrt().atan2((1.0 - h).sqrt())
}

/// Forward azimuth from `a` to `b`, degrees in `[0, 360)`.
pub fn initial_bearing(a: &GeoPoint, b: &GeoPoint) -> Result<f64, GeoError> {
    if a.same_position(b) || haversine_distance(a, b) == 0.0 {
        return Err(GeoError::DegenerateInput);
    }
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dlambda = wrap_radians(b.lon.to_radians() - a.lon.to_radians());
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    Ok(normalize_bearing(y.atan2(x).to_degrees()))
}

pub(crate) fn normalize_bearing(deg: f64) -> f64 {
    let b = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if b >= 360.0 {
        0.0
    } else {
        b
    }
}

/// The point reached by travelling `distance_m` from `p` along the great
/// circle with initial bearing `bearing_deg`. The timestamp of `p` is kept.
pub fn destination_point(p: &GeoPoint, bearing_deg: f64, distance_m: f64) -> GeoPoint {
    if distance_m == 0.0 {
        return *p;
    }
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let phi1 = p.lat.to_radians();
    let lambda1 = p.lon.to_radians();

    let sin_phi2 = phi1.sin() * delta.cos() + phi1.cos() * delta.sin() * theta.cos();
    let phi2 = sin_phi2.clamp(-1.0, 1.0).asin();
    let y = theta.sin() * delta.sin() * phi1.cos();
    let x = delta.cos() - phi1.sin() * sin_phi2;
    let lambda2 = lambda1 + y.atan2(x);

    GeoPoint {
        lat: phi2.to_degrees().clamp(-90.0, 90.0),
        lon: normalize_lon(lambda2.to_degrees()),
        t: p.t,
    }
}

// ---------------------------------------------------------------------------
// Spatial grid
// ---------------------------------------------------------------------------

/// Default edge length of a grid cell, metres.
pub const DEFAULT_CELL_SIZE_M: f64 = 1_000.0;

type Cell = (i64, i64);

/// Uniform grid over latitude/longitude with square-degree cells.
///
/// A cell spans `cell_size / metres-per-degree` degrees in both axes, so
/// cells shrink in the east-west direction toward the poles. Queries scan
/// the bounding cells of the search circle and then filter exactly by
/// haversine distance, so results never depend on the cell size.
#[derive(Debug, Clone)]
pub struct SpatialGrid<K> {
    cell_deg: f64,
    cols: i64,
    rows: i64,
    cells: HashMap<Cell, HashMap<K, GeoPoint>>,
    index: HashMap<K, Cell>,
}

impl<K> Default for SpatialGrid<K>
where
    K: Clone + Eq + Hash + Ord,
{
    fn default() -> Self {
        Self::new(DEFAULT_CELL_SIZE_M)
    }
}

impl<K> SpatialGrid<K>
where
    K: Clone + Eq + Hash + Ord,
{
    pub fn new(cell_size_m: f64) -> Self {
        let cell_size_m = if cell_size_m.is_finite() && cell_size_m > 0.0 {
            cell_size_m
        } else {
            DEFAULT_CELL_SIZE_M
        };
        let m_per_deg = EARTH_RADIUS_M * PI / 180.0;
        let cell_deg = (cell_size_m / m_per_deg).min(180.0);
        Self {
            cell_deg,
            cols: (360.0 / cell_deg).ceil() as i64,
            rows: (180.0 / cell_deg).ceil() as i64 + 1,
            cells: HashMap::new(),
            index: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn contains(&self, id: &K) -> bool {
        self.index.contains_key(id)
    }

    pub fn position(&self, id: &K) -> Option<&GeoPoint> {
        let cell = self.index.get(id)?;
        self.cells.get(cell)?.get(id)
    }

    fn row_of(&self, lat: f64) -> i64 {
        (((lat + 90.0) / self.cell_deg).floor() as i64).clamp(0, self.rows - 1)
    }

    fn col_of(&self, lon: f64) -> i64 {
        (((lon + 180.0) / self.cell_deg).floor() as i64).rem_euclid(self.cols)
    }

    fn cell_of(&self, p: &GeoPoint) -> Cell {
        (self.row_of(p.lat), self.col_of(p.lon))
    }

    /// Inserts or moves `id`. Returns the previous position if there was one.
    pub fn insert(&mut self, id: K, p: GeoPoint) -> Option<GeoPoint> {
        let previous = self.remove(&id);
        let cell = self.cell_of(&p);
        self.cells.entry(cell).or_default().insert(id.clone(), p);
        self.index.insert(id, cell);
        previous
    }

    /// Moves an already stored entity.
    pub fn update(&mut self, id: &K, p: GeoPoint) -> Result<(), GeoError> {
        if !self.index.contains_key(id) {
            return Err(GeoError::UnknownEntity);
        }
        self.insert(id.clone(), p);
        Ok(())
    }

    pub fn remove(&mut self, id: &K) -> Option<GeoPoint> {
        let cell = self.index.remove(id)?;
        let bucket = self.cells.get_mut(&cell)?;
        let p = bucket.remove(id);
        if bucket.is_empty() {
            self.cells.remove(&cell);
        }
        p
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &GeoPoint)> {
        self.cells.values().flat_map(|bucket| bucket.iter())
    }

    /// Ids whose stored position is within `radius_m` (inclusive) of `center`.
    pub fn query_radius(&self, center: &GeoPoint, radius_m: f64) -> BTreeSet<K> {
        let mut out = BTreeSet::new();
        if self.index.is_empty() || radius_m.is_nan() || radius_m < 0.0 {
            return out;
        }
        let hit = |p: &GeoPoint| haversine_distance(center, p) <= radius_m;

        match self.candidate_cells(center, radius_m) {
            Some(cells) if cells.len() < self.cells.len() => {
                for cell in cells {
                    if let Some(bucket) = self.cells.get(&cell) {
                        out.extend(bucket.iter().filter(|(_, p)| hit(p)).map(|(k, _)| k.clone()));
                    }
                }
            }
            _ => {
                out.extend(self.iter().filter(|(_, p)| hit(p)).map(|(k, _)| k.clone()));
            }
        }
        out
    }

    // Cells overlapping the bounding box of the search circle, padded by one
    // cell on every side. `None` means "scan everything".
    fn candidate_cells(&self, center: &GeoPoint, radius_m: f64) -> Option<Vec<Cell>> {
        let delta = radius_m / EARTH_RADIUS_M;
        if delta >= PI / 2.0 {
            return None;
        }
        let dlat = delta.to_degrees();
        let lat_lo = center.lat - dlat;
        let lat_hi = center.lat + dlat;
        let row_lo = self.row_of(lat_lo.max(-90.0)) - 1;
        let row_hi = self.row_of(lat_hi.min(90.0)) + 1;

        // Circle reaching a pole covers every longitude.
        let max_abs_lat = lat_lo.abs().max(lat_hi.abs());
        let cols: Vec<i64> = if max_abs_lat >= 89.0 {
            (0..self.cols).collect()
        } else {
            let s = delta.sin() / center.lat.to_radians().cos();
            if s >= 1.0 {
                (0..self.cols).collect()
            } else {
                let dlon = s.asin().to_degrees();
                let lo = ((center.lon - dlon + 180.0) / self.cell_deg).floor() as i64 - 1;
                let hi = ((center.lon + dlon + 180.0) / self.cell_deg).floor() as i64 + 1;
                if hi - lo + 1 >= self.cols {
                    (0..self.cols).collect()
                } else {
                    (lo..=hi).map(|c| c.rem_euclid(self.cols)).collect()
                }
            }
        };

        let rows = (row_lo.max(0))..=(row_hi.min(self.rows - 1));
        let n = (rows.end() - rows.start() + 1).max(0) as usize * cols.len();
        if n > self.cells.len().saturating_mul(4) + 64 {
            return None;
        }
        let mut cells = Vec::with_capacity(n);
        for r in rows {
            cells.extend(cols.iter().map(|&c| (r, c)));
        }
        Some(cells)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    // Spherical law of cosines, written independently of the haversine path.
    fn law_of_cosines(a: &GeoPoint, b: &GeoPoint) -> f64 {
        let (p1, p2) = (a.lat().to_radians(), b.lat().to_radians());
        let dl = (b.lon() - a.lon()).to_radians();
        let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
        EARTH_RADIUS_M * c.clamp(-1.0, 1.0).acos()
    }

    // Bearing from local north/east unit vectors in 3-D.
    fn bearing_by_components(a: &GeoPoint, b: &GeoPoint) -> f64 {
        let v = |p: &GeoPoint| {
            let (la, lo) = (p.lat().to_radians(), p.lon().to_radians());
            [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
        };
        let (la, lo) = (a.lat().to_radians(), a.lon().to_radians());
        let east = [-lo.sin(), lo.cos(), 0.0];
        let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
        let (va, vb) = (v(a), v(b));
        let d = [vb[0] - va[0], vb[1] - va[1], vb[2] - va[2]];
        let dot = |x: [f64; 3], y: [f64; 3]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
        dot(d, east).atan2(dot(d, north)).to_degrees().rem_euclid(360.0)
    }

    #[test]
    fn construction_validates_and_wraps() {
        assert!(GeoPoint::new(90.5, 0.0).is_err());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
        assert_eq!(p(0.0, 180.0).lon(), 180.0);
        assert_eq!(p(0.0, -180.0).lon(), 180.0);
        assert_eq!(p(0.0, 190.0).lon(), -170.0);
        assert_eq!(p(0.0, -540.0).lon(), 180.0);
        assert_eq!(p(0.0, 359.0).lon(), -1.0);
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine_distance(&p(33.0, 73.0), &p(33.0, 73.0)), 0.0);
        let half = haversine_distance(&p(0.0, 0.0), &p(0.0, 180.0));
        assert!((half - PI * EARTH_RADIUS_M).abs() < 1e-6);
        assert!((half - 20_015_086.8).abs() < 0.1);

        let a = p(33.6844, 73.0479);
        let b = p(33.7294, 73.0931);
        let d = haversine_distance(&a, &b);
        let oracle = law_of_cosines(&a, &b);
        assert!(((d - oracle) / oracle).abs() < 1e-6, "{d} vs {oracle}");
    }

    #[test]
    fn bearing_examples() {
        assert!((initial_bearing(&p(0.0, 0.0), &p(1.0, 0.0)).unwrap() - 0.0).abs() < 1e-12);
        assert!((initial_bearing(&p(0.0, 0.0), &p(0.0, 1.0)).unwrap() - 90.0).abs() < 1e-12);
        assert_eq!(
            initial_bearing(&p(10.0, 10.0), &p(10.0, 10.0)),
            Err(GeoError::DegenerateInput)
        );
        let a = p(33.6844, 73.0479);
        let b = p(33.7294, 73.0931);
        let got = initial_bearing(&a, &b).unwrap();
        let want = bearing_by_components(&a, &b);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn destination_examples() {
        let origin = p(33.6, 73.0).with_time(5);
        assert_eq!(destination_point(&origin, 123.0, 0.0), origin);

        let q = destination_point(&p(0.0, 0.0), 90.0, PI * EARTH_RADIUS_M / 2.0);
        assert!(q.lat().abs() < 1e-9);
        assert!((q.lon() - 90.0).abs() < 1e-9);

        let r = destination_point(&origin, 45.0, 12_345.0);
        assert_eq!(r.t(), Some(5));
        let back = haversine_distance(&origin, &r);
        assert!(((back - 12_345.0) / 12_345.0).abs() < 1e-6);
    }

    #[test]
    fn grid_empty_and_boundary() {
        let mut g: SpatialGrid<u32> = SpatialGrid::default();
        let c = p(33.7, 73.05);
        assert!(g.query_radius(&c, 10_000.0).is_empty());
        g.insert(1, c);
        assert_eq!(g.query_radius(&c, 0.0), BTreeSet::from([1]));

        // Entity at exactly the query radius is included.
        let edge = destination_point(&c, 77.0, 10_000.0);
        g.insert(2, edge);
        let r = haversine_distance(&c, &edge);
        assert!(g.query_radius(&c, r).contains(&2));
        assert!(!g.query_radius(&c, r - 1e-6).contains(&2));
    }

    #[test]
    fn grid_insert_update_remove() {
        let mut g: SpatialGrid<&str> = SpatialGrid::new(500.0);
        assert_eq!(g.update(&"a", p(1.0, 1.0)), Err(GeoError::UnknownEntity));
        assert!(g.insert("a", p(1.0, 1.0)).is_none());
        g.update(&"a", p(2.0, 2.0)).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.position(&"a"), Some(&p(2.0, 2.0)));
        assert!(g.query_radius(&p(1.0, 1.0), 1_000.0).is_empty());
        assert_eq!(g.remove(&"a"), Some(p(2.0, 2.0)));
        assert!(g.is_empty());
    }

    #[test]
    fn grid_handles_antimeridian_and_poles() {
        let mut g: SpatialGrid<u32> = SpatialGrid::default();
        g.insert(1, p(10.0, 179.99));
        g.insert(2, p(10.0, -179.99));
        g.insert(3, p(89.99, 0.0));
        g.insert(4, p(89.99, 180.0));
        assert_eq!(g.query_radius(&p(10.0, 180.0), 5_000.0), BTreeSet::from([1, 2]));
        assert_eq!(g.query_radius(&p(90.0, 0.0), 5_000.0), BTreeSet::from([3, 4]));
    }
}
