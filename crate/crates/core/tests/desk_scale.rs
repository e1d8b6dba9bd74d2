//! Desk-scale cross-checks on a synthetic Walker shell: nested-demand
//! monotonicity of critical counts and physically recomputable path
//! delays.

use conres_core::orbital::{
    compute_contacts, distance_km, generate_walker, ground_cell_position, satellite_position,
    ConstellationConfig, DelayMode, DelayModel, GroundCell, LayerConfig, SPEED_OF_LIGHT_KM_S,
};
use conres_core::report::critical_count_series;
use conres_core::routing::ServiceDemand;
use conres_core::satb::rank_critical;
use conres_core::temporal_graph::{collect_boundaries, discretize, merge_windows};

const EPOCH: &str = "2024-10-09T04:00:00Z";

fn walker(horizon_s: f64, delay: DelayModel, cells: &[GroundCell]) -> conres_core::ContactPlan {
    let cfg = ConstellationConfig {
        layers: vec![LayerConfig {
            planes: 8,
            sats_per_plane: 25,
            altitude_km: 1150.0,
            inclination_deg: 53.0,
            phasing_offset_deg: 0.0,
        }],
        epoch: EPOCH.into(),
        horizon_s,
        sample_step_s: 10.0,
        los_threshold_km: 2500.0,
    };
    let sats = generate_walker(&cfg).unwrap();
    compute_contacts(&sats, cells, &cfg, &delay).unwrap()
}

fn six_cells() -> Vec<GroundCell> {
    vec![
        GroundCell::new("C1", 48.85, 2.35),
        GroundCell::new("C2", 40.71, -74.01),
        GroundCell::new("C3", 35.68, 139.69),
        GroundCell::new("C4", -33.87, 151.21),
        GroundCell::new("C5", 51.51, -0.13),
        GroundCell::new("C6", 1.35, 103.82),
    ]
}

#[test]
fn nested_demand_grows_critical_counts() {
    let cells = six_cells();
    let plan = walker(1800.0, DelayModel::new(DelayMode::Uniform, 42), &cells);
    let windows = merge_windows(&collect_boundaries(&plan), 60.0).unwrap();
    let graphs = discretize(&plan, &windows).unwrap();
    let table = graphs[0].table();

    let small: Vec<String> = cells.iter().take(3).map(|c| c.id.clone()).collect();
    let large: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let d_small = ServiceDemand::full_mesh(table, &small).unwrap();
    let d_large = ServiceDemand::full_mesh(table, &large).unwrap();

    let m_small = rank_critical(&graphs, &d_small).unwrap().matrix;
    let m_large = rank_critical(&graphs, &d_large).unwrap().matrix;
    let s_small = critical_count_series(&m_small, &windows);
    let s_large = critical_count_series(&m_large, &windows);
    for w in 0..windows.len() {
        assert!(
            s_large.values[w].unwrap() >= s_small.values[w].unwrap(),
            "window {w}: larger nested demand lost critical satellites"
        );
    }
    // Stronger per-satellite form: routing is per-pair independent, so a
    // nested demand can only add contributions.
    for w in 0..windows.len() {
        for col in 0..m_small.satellites.len() {
            assert!(m_large.value(w, col) >= m_small.value(w, col));
        }
    }
}

#[test]
fn physical_path_delays_recompute_from_geometry() {
    let cells = six_cells();
    let plan = walker(600.0, DelayModel::new(DelayMode::Physical, 0), &cells);
    let windows = merge_windows(&collect_boundaries(&plan), 60.0).unwrap();
    let graphs = discretize(&plan, &windows).unwrap();
    let table = graphs[0].table();
    let cfg_sats = {
        let cfg = ConstellationConfig {
            layers: vec![LayerConfig {
                planes: 8,
                sats_per_plane: 25,
                altitude_km: 1150.0,
                inclination_deg: 53.0,
                phasing_offset_deg: 0.0,
            }],
            epoch: EPOCH.into(),
            horizon_s: 600.0,
            sample_step_s: 10.0,
            los_threshold_km: 2500.0,
        };
        generate_walker(&cfg).unwrap()
    };
    let ids: Vec<String> = cells.iter().map(|c| c.id.clone()).collect();
    let demand = ServiceDemand::full_mesh(table, &ids).unwrap();
    let baseline = rank_critical(&graphs, &demand).unwrap();

    let pos_of = |id: &str, t: f64| {
        if let Some((_, e)) = cfg_sats.iter().find(|(s, _)| s == id) {
            satellite_position(e, t)
        } else {
            let c = cells.iter().find(|c| c.id == id).unwrap();
            ground_cell_position(c, t)
        }
    };

    let mut routed = 0;
    for wp in &baseline.window_paths {
        for p in wp.paths.iter().flatten() {
            // Rebuild the path delay hop by hop from the covering contacts'
            // midpoint-sample geometry.
            let mut expect = 0.0;
            for hop in p.hops.windows(2) {
                let (u, v) = (table.id(hop[0]), table.id(hop[1]));
                let best = plan
                    .contacts
                    .iter()
                    .filter(|c| {
                        c.from == u
                            && c.to == v
                            && c.t_start <= graphs[p.window].window.t_start
                            && c.t_end >= graphs[p.window].window.t_end
                    })
                    .map(|c| {
                        let i = (c.t_start / 10.0).round() as usize;
                        let j = (c.t_end / 10.0).round() as usize;
                        let t_mid = ((i + j) / 2) as f64 * 10.0;
                        let d = distance_km(pos_of(u, t_mid), pos_of(v, t_mid));
                        conres_core::contact_plan::quantize3(d / SPEED_OF_LIGHT_KM_S * 1000.0)
                    })
                    .fold(f64::INFINITY, f64::min);
                expect += best;
            }
            assert!(
                (p.delay_ms - expect).abs() < 1e-9,
                "path delay {} != recomputed {expect}",
                p.delay_ms
            );
            routed += 1;
        }
    }
    assert!(routed > 0, "no routed pairs to check");
}
