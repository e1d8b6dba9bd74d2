use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use conres_core::failure::{evaluate_failure, FailureEvent, FailureKind};
use conres_core::orbital::{
    compute_contacts, generate_walker, ConstellationConfig, DelayMode, DelayModel, GroundCell,
    LayerConfig,
};
use conres_core::routing::{all_service_paths, ServiceDemand};
use conres_core::satb::rank_critical;
use conres_core::temporal_graph::{collect_boundaries, discretize, merge_windows, SnapshotGraph};

fn bench_config(planes: u32, spp: u32, horizon_s: f64) -> ConstellationConfig {
    ConstellationConfig {
        layers: vec![LayerConfig {
            planes,
            sats_per_plane: spp,
            altitude_km: 1150.0,
            inclination_deg: 53.0,
            phasing_offset_deg: 0.0,
        }],
        epoch: "2024-10-09T04:00:00Z".into(),
        horizon_s,
        sample_step_s: 10.0,
        los_threshold_km: 2500.0,
    }
}

fn cells() -> Vec<GroundCell> {
    vec![
        GroundCell::new("C01", 48.85, 2.35),
        GroundCell::new("C02", 40.71, -74.01),
        GroundCell::new("C03", 35.68, 139.69),
        GroundCell::new("C04", -33.87, 151.21),
        GroundCell::new("C05", 51.51, -0.13),
        GroundCell::new("C06", 1.35, 103.82),
    ]
}

fn build_world(planes: u32, spp: u32, horizon_s: f64) -> (Vec<SnapshotGraph>, ServiceDemand) {
    let cfg = bench_config(planes, spp, horizon_s);
    let sats = generate_walker(&cfg).unwrap();
    let cells = cells();
    let delay = DelayModel::new(DelayMode::Uniform, 42);
    let plan = compute_contacts(&sats, &cells, &cfg, &delay).unwrap();
    let windows = merge_windows(&collect_boundaries(&plan), 60.0).unwrap();
    let graphs = discretize(&plan, &windows).unwrap();
    let ids: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let demand = ServiceDemand::full_mesh(graphs[0].table(), &ids).unwrap();
    (graphs, demand)
}

fn contact_generation(c: &mut Criterion) {
    let cfg = bench_config(8, 25, 1800.0);
    let sats = generate_walker(&cfg).unwrap();
    let cells = cells();
    let delay = DelayModel::new(DelayMode::Uniform, 42);
    c.bench_function("contacts_200sats_30min", |b| {
        b.iter(|| compute_contacts(&sats, &cells, &cfg, &delay).unwrap())
    });
}

fn window_routing(c: &mut Criterion) {
    let (graphs, demand) = build_world(8, 25, 1800.0);
    c.bench_function("route_15pairs_one_window", |b| {
        b.iter(|| all_service_paths(&graphs[0], &demand).unwrap())
    });
}

fn full_ranking(c: &mut Criterion) {
    let (graphs, demand) = build_world(8, 25, 1800.0);
    c.bench_function("rank_critical_30min", |b| {
        b.iter(|| rank_critical(&graphs, &demand).unwrap())
    });
}

fn failure_evaluation(c: &mut Criterion) {
    let (graphs, demand) = build_world(8, 25, 3600.0);
    let baseline = rank_critical(&graphs, &demand).unwrap();
    let windows: Vec<_> = graphs.iter().map(|g| g.window).collect();
    let top4 = FailureEvent::top_k(&baseline, &windows, 0.0, 4).unwrap();
    c.bench_function("evaluate_top4_failure_1h", |b| {
        b.iter_batched(
            || top4.clone(),
            |event| evaluate_failure(&graphs, &demand, &baseline, &event).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let all_sats: BTreeSet<usize> = graphs[0].table().satellites().iter().copied().collect();
    let sample: BTreeSet<usize> = all_sats.iter().copied().step_by(10).collect();
    let spread = FailureEvent {
        t_f: 0.0,
        failed: sample,
        kind: FailureKind::Explicit,
    };
    c.bench_function("evaluate_spread_failure_1h", |b| {
        b.iter_batched(
            || spread.clone(),
            |event| evaluate_failure(&graphs, &demand, &baseline, &event).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(
    benches,
    contact_generation,
    window_routing,
    full_ranking,
    failure_evaluation
);
criterion_main!(benches);
