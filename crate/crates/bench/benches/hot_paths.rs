use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crowdtrace_core::geo::{destination_point, haversine_distance, GeoPoint, SpatialGrid};
use crowdtrace_core::registry::{normalize_plate, plate_similarity, ReporterMode, UserId};
use crowdtrace_core::service::{Service, ServiceConfig};
use crowdtrace_core::sim::{run_scenario, Scenario};
use crowdtrace_core::trajectory::{project_position, ProjectionConfig, Sighting, SightingSource, TrackProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CENTER: (f64, f64) = (33.6844, 73.0479);

fn scatter(n: usize, seed: u64) -> Vec<GeoPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = GeoPoint::new(CENTER.0, CENTER.1).unwrap();
    (0..n)
        .map(|_| destination_point(&c, rng.random_range(0.0..360.0), 30_000.0 * rng.random::<f64>().sqrt()))
        .collect()
}

fn geo(c: &mut Criterion) {
    let pts = scatter(1024, 1);
    c.bench_function("haversine", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) & 1023;
            haversine_distance(black_box(&pts[i]), black_box(&pts[1023 - i]))
        })
    });

    let mut g = c.benchmark_group("grid_query_10km");
    for n in [1_000usize, 10_000, 100_000] {
        let mut grid = SpatialGrid::default();
        for (i, p) in scatter(n, 2).into_iter().enumerate() {
            grid.insert(i, p);
        }
        let center = GeoPoint::new(CENTER.0, CENTER.1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &grid, |b, grid| {
            b.iter(|| grid.query_radius(black_box(&center), 10_000.0).len())
        });
    }
    g.finish();
}

fn plates(c: &mut Criterion) {
    c.bench_function("normalize_plate", |b| b.iter(|| normalize_plate(black_box(" abc 1234 "))));
    let a = normalize_plate("ABC-1234").unwrap();
    let z = normalize_plate("A8C-I234").unwrap();
    c.bench_function("plate_similarity", |b| b.iter(|| plate_similarity(black_box(&a), black_box(&z))));
}

fn trajectory(c: &mut Criterion) {
    let plate = normalize_plate("ABC-123").unwrap();
    let mut profile = TrackProfile::new(plate.clone());
    let start = GeoPoint::new(CENTER.0, CENTER.1).unwrap();
    for k in 0..10 {
        let p = destination_point(&start, 45.0, 150.0 * k as f64).with_time(1_700_000_000_000 + 10_000 * k);
        profile
            .add_sighting(Sighting::new(plate.clone(), p, UserId(1), 1.0, SightingSource::Dashcam).unwrap())
            .unwrap();
    }
    let cfg = ProjectionConfig::default();
    let t = 1_700_000_000_000 + 200_000;
    c.bench_function("project_position", |b| b.iter(|| project_position(black_box(&profile), t, &cfg)));
}

fn service(c: &mut Criterion) {
    let mut svc = Service::in_memory(ServiceConfig::default()).unwrap();
    let t0 = 1_700_000_000_000;
    let mut reporter = None;
    for (i, p) in scatter(1_000, 3).into_iter().enumerate() {
        let r = svc.register(&format!("nid-{i}"), ReporterMode::Pedestrian, t0).unwrap();
        svc.update_location(r.user_id, p, t0).unwrap();
        reporter.get_or_insert(r.user_id);
    }
    let reporter = reporter.unwrap();
    let mut k = 0u64;
    c.bench_function("report_incident_1000_users", |b| {
        b.iter(|| {
            k += 1;
            let plate = format!("AB-{}", k % 10_000);
            let at = GeoPoint::new(CENTER.0, CENTER.1).unwrap();
            svc.report_incident(reporter, &plate, "", at, t0 + k as i64 * 3_600_000)
        })
    });
}

fn scenario(c: &mut Criterion) {
    let sc = Scenario {
        n_points: 200,
        horizon: 600.0,
        ..Scenario::default()
    };
    let mut g = c.benchmark_group("scenario");
    g.sample_size(10);
    g.bench_function("200_points_600s", |b| b.iter(|| run_scenario(black_box(&sc))));
    g.finish();
}

criterion_group!(benches, geo, plates, trajectory, service, scenario);
criterion_main!(benches);
