//! Deterministic instance generators and brute-force reference
//! implementations used by the test suites. Everything here is independent
//! of the production search and update paths it is used to check.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::contact_plan::{quantize3, Contact, ContactPlan, NodeKind, NodeRecord};
use crate::routing::{ServiceDemand, WindowPaths};
use crate::satb::SatbMatrix;
use crate::temporal_graph::{
    collect_boundaries, discretize, merge_windows, remove_nodes, SnapshotGraph,
};

pub const EPOCH: &str = "2024-10-09T04:00:00Z";

/// A randomized small scenario: a valid plan, its snapshots, and a demand.
pub struct RandomInstance {
    pub plan: ContactPlan,
    pub graphs: Vec<SnapshotGraph>,
    pub demand: ServiceDemand,
}

fn pick(rng: &mut ChaCha8Rng, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

/// Generate a random instance with <= 15 satellites, <= 6 cells, and <= 5
/// windows. Contacts are symmetric, delays in [1, 20] ms on a 0.5 ms grid,
/// times on a 20 s grid over a 300 s horizon with a 60 s merge threshold.
pub fn random_instance(seed: u64) -> RandomInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_sats = 2 + pick(&mut rng, 14); // 2..=15
    let n_cells = 2 + pick(&mut rng, 5); // 2..=6
    let horizon = 300.0;

    let mut nodes = Vec::new();
    let mut sat_ids = Vec::new();
    let mut cell_ids = Vec::new();
    for i in 0..n_sats {
        let id = format!("S{i:02}");
        nodes.push(NodeRecord::satellite(id.clone()));
        sat_ids.push(id);
    }
    for i in 0..n_cells {
        let id = format!("C{i:02}");
        nodes.push(NodeRecord::cell(id.clone(), -60.0 + 20.0 * i as f64, 10.0 * i as f64));
        cell_ids.push(id);
    }

    // Candidate undirected pairs: sat-sat and sat-cell.
    let mut pairs: Vec<(String, String)> = Vec::new();
    for i in 0..n_sats {
        for j in (i + 1)..n_sats {
            pairs.push((sat_ids[i].clone(), sat_ids[j].clone()));
        }
        for c in &cell_ids {
            pairs.push((sat_ids[i].clone(), c.clone()));
        }
    }

    let mut contacts = Vec::new();
    for (a, b) in &pairs {
        let n_contacts = pick(&mut rng, 3); // 0..=2 contacts per pair
        for _ in 0..n_contacts {
            let start = 20.0 * pick(&mut rng, 14) as f64; // 0..=260
            let len = 20.0 * (1 + pick(&mut rng, 7)) as f64; // 20..=140
            let end = (start + len).min(horizon);
            if end <= start {
                continue;
            }
            let delay = quantize3(1.0 + 0.5 * pick(&mut rng, 39) as f64); // 1..=20
            contacts.push(Contact::new(start, end, a.clone(), b.clone(), delay));
            contacts.push(Contact::new(start, end, b.clone(), a.clone(), delay));
        }
    }

    let plan = ContactPlan::new(EPOCH, (0.0, horizon), nodes, contacts)
        .expect("generated plan is valid");
    let windows = merge_windows(&collect_boundaries(&plan), 60.0).expect("windows");
    let graphs = discretize(&plan, &windows).expect("discretize");

    // Demand: full mesh over a random nonempty cell subset (>= 2 cells).
    let k = 2 + pick(&mut rng, n_cells - 1);
    let mut chosen = cell_ids.clone();
    while chosen.len() > k {
        let drop = pick(&mut rng, chosen.len());
        chosen.remove(drop);
    }
    let demand = ServiceDemand::full_mesh(graphs[0].table(), &chosen).expect("demand");

    RandomInstance {
        plan,
        graphs,
        demand,
    }
}

/// One enumerated simple path with satellite-only interior.
#[derive(Debug, Clone, PartialEq)]
pub struct EnumPath {
    pub hops: Vec<usize>,
    pub delay_ms: f64,
}

/// Exhaustively enumerate every simple path from `src` to `dst` whose
/// interior nodes are satellites, walking available edges only. Intended
/// for snapshots of at most ~12 nodes.
pub fn enumerate_paths(g: &SnapshotGraph, src: usize, dst: usize) -> Vec<EnumPath> {
    let table = g.table();
    let mut out = Vec::new();
    let mut stack = vec![src];
    let mut visited = vec![false; g.node_count()];
    visited[src] = true;

    fn dfs(
        g: &SnapshotGraph,
        table: &crate::temporal_graph::NodeTable,
        dst: usize,
        stack: &mut Vec<usize>,
        visited: &mut Vec<bool>,
        delay: f64,
        out: &mut Vec<EnumPath>,
    ) {
        let here = *stack.last().unwrap();
        if here == dst {
            out.push(EnumPath {
                hops: stack.clone(),
                delay_ms: delay,
            });
            return;
        }
        for e in g.edges_from(here) {
            if visited[e.to] {
                continue;
            }
            if table.kind(e.to) == NodeKind::Cell && e.to != dst {
                continue;
            }
            visited[e.to] = true;
            stack.push(e.to);
            dfs(g, table, dst, stack, visited, delay + e.delay_ms, out);
            stack.pop();
            visited[e.to] = false;
        }
    }

    dfs(g, table, dst, &mut stack, &mut visited, 0.0, &mut out);
    out
}

/// The tie-break key: (delay, hop count, hop sequence).
pub fn tie_break_key(p: &EnumPath) -> (f64, usize, Vec<usize>) {
    (p.delay_ms, p.hops.len(), p.hops.clone())
}

/// The unique winner among enumerated paths under the deterministic
/// ordering, or `None` when no path exists.
pub fn best_enumerated(paths: &[EnumPath]) -> Option<&EnumPath> {
    paths.iter().min_by(|a, b| {
        a.delay_ms
            .total_cmp(&b.delay_ms)
            .then_with(|| a.hops.len().cmp(&b.hops.len()))
            .then_with(|| a.hops.cmp(&b.hops))
    })
}

/// Full from-scratch failure evaluation on residual graphs: per window,
/// remove the failed set and recompute every pair.
pub struct ScratchImpact {
    pub eta: Vec<f64>,
    /// `delays[window][pair]`: effective delay, `None` when unroutable.
    pub delays: Vec<Vec<Option<f64>>>,
    pub matrix: SatbMatrix,
}

pub fn scratch_failure(
    graphs: &[SnapshotGraph],
    demand: &ServiceDemand,
    failed: &BTreeSet<usize>,
    window_f: usize,
) -> ScratchImpact {
    let table = graphs[0].table();
    let satellites: Vec<usize> = table.satellites().to_vec();
    let mut eta = Vec::with_capacity(graphs.len());
    let mut delays = Vec::with_capacity(graphs.len());
    let mut rows = Vec::with_capacity(graphs.len());
    for (w, g) in graphs.iter().enumerate() {
        let effective = if w >= window_f {
            remove_nodes(g, failed).expect("valid removal")
        } else {
            g.clone()
        };
        let wp: WindowPaths =
            crate::routing::all_service_paths(&effective, demand).expect("routable");
        let mut row = vec![0u32; satellites.len()];
        for p in wp.paths.iter().flatten() {
            for &node in p.interior() {
                row[table.satellite_column(node).unwrap()] += 1;
            }
        }
        rows.push(row);
        eta.push(if demand.pair_count() == 0 {
            0.0
        } else {
            wp.routed_count() as f64 / demand.pair_count() as f64 * 100.0
        });
        delays.push(
            wp.paths
                .iter()
                .map(|p| p.as_ref().map(|p| p.delay_ms))
                .collect(),
        );
    }
    ScratchImpact {
        eta,
        delays,
        matrix: SatbMatrix { satellites, rows },
    }
}

/// The four-satellite, four-cell, three-pair, three-window fixture whose
/// SATB vectors are S1=[2,0,0], S2=[2,1,2], S3=[0,2,0], S4=[0,1,2]. Every
/// window routes each pair over a unique tree, so the expected paths do not
/// depend on tie-breaking.
pub fn worked_example_plan() -> ContactPlan {
    let nodes = vec![
        NodeRecord::cell("C1", 10.0, 0.0),
        NodeRecord::cell("C2", 20.0, 0.0),
        NodeRecord::cell("C3", 30.0, 0.0),
        NodeRecord::cell("C4", 40.0, 0.0),
        NodeRecord::satellite("S1"),
        NodeRecord::satellite("S2"),
        NodeRecord::satellite("S3"),
        NodeRecord::satellite("S4"),
    ];
    let per_window: [&[(&str, &str, f64)]; 3] = [
        &[
            ("C1", "S1", 6.0),
            ("S1", "C3", 6.0),
            ("C2", "S2", 7.0),
            ("S2", "C4", 7.0),
            ("S1", "S2", 5.0),
        ],
        &[
            ("C1", "S3", 6.0),
            ("S3", "C3", 6.0),
            ("C2", "S2", 7.0),
            ("S2", "C4", 7.0),
            ("S3", "S4", 5.0),
            ("S4", "C4", 7.0),
        ],
        &[
            ("C1", "S2", 6.0),
            ("S2", "C3", 6.0),
            ("C2", "S4", 7.0),
            ("S4", "C4", 7.0),
            ("S2", "S4", 5.0),
        ],
    ];
    let mut contacts = Vec::new();
    for (w, edges) in per_window.iter().enumerate() {
        let (s, e) = (60.0 * w as f64, 60.0 * (w + 1) as f64);
        for (a, b, d) in edges.iter() {
            contacts.push(Contact::new(s, e, *a, *b, *d));
            contacts.push(Contact::new(s, e, *b, *a, *d));
        }
    }
    ContactPlan::new(EPOCH, (0.0, 180.0), nodes, contacts).expect("fixture is valid")
}

/// The worked example's three service pairs: (C1,C3), (C2,C4), (C1,C4).
pub fn worked_example_demand(graphs: &[SnapshotGraph]) -> ServiceDemand {
    ServiceDemand::from_pairs(
        graphs[0].table(),
        &[
            ("C1".into(), "C3".into()),
            ("C2".into(), "C4".into()),
            ("C1".into(), "C4".into()),
        ],
    )
    .expect("fixture demand")
}
