//! Oracles shared by the integration suites. Nothing here calls into the
//! crate's geodesy, so they stay independent of the code they check.
#![allow(dead_code)]

use crowdtrace_core::geo::EARTH_RADIUS_M;

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn unit_vector(lat: f64, lon: f64) -> Vec3 {
    let (la, lo) = (lat.to_radians(), lon.to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

pub fn lat_lon(v: Vec3) -> (f64, f64) {
    let lat = v[2].clamp(-1.0, 1.0).asin().to_degrees();
    let lon = v[1].atan2(v[0]).to_degrees();
    (lat, lon)
}

/// Constant-speed great-circle motion by rotating the position vector
/// toward the initial heading: `p(s) = p0 cos(s/R) + e sin(s/R)`.
pub fn dead_reckon(lat: f64, lon: f64, bearing_deg: f64, distance_m: f64) -> (f64, f64) {
    let p0 = unit_vector(lat, lon);
    let (la, lo) = (lat.to_radians(), lon.to_radians());
    let east = [-lo.sin(), lo.cos(), 0.0];
    let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
    let th = bearing_deg.to_radians();
    let e = [
        north[0] * th.cos() + east[0] * th.sin(),
        north[1] * th.cos() + east[1] * th.sin(),
        north[2] * th.cos() + east[2] * th.sin(),
    ];
    let a = distance_m / EARTH_RADIUS_M;
    lat_lon([
        p0[0] * a.cos() + e[0] * a.sin(),
        p0[1] * a.cos() + e[1] * a.sin(),
        p0[2] * a.cos() + e[2] * a.sin(),
    ])
}

/// Chord-based great-circle distance.
pub fn chord_distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (u, v) = (unit_vector(a.0, a.1), unit_vector(b.0, b.1));
    let d = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    let chord = dot(d, d).sqrt();
    2.0 * EARTH_RADIUS_M * (chord / 2.0).clamp(-1.0, 1.0).asin()
}

/// Spherical law of cosines.
pub fn law_of_cosines(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dl = (b.1 - a.1).to_radians();
    let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * dl.cos();
    EARTH_RADIUS_M * c.clamp(-1.0, 1.0).acos()
}

/// Least-squares slope via the normal equations (Cramer's rule).
pub fn normal_equations_slope(ts: &[f64], vs: &[f64]) -> f64 {
    let n = ts.len() as f64;
    let st: f64 = ts.iter().sum();
    let stt: f64 = ts.iter().map(|t| t * t).sum();
    let sv: f64 = vs.iter().sum();
    let stv: f64 = ts.iter().zip(vs).map(|(t, v)| t * v).sum();
    (n * stv - st * sv) / (n * stt - st * st)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
