//! Node-failure events and their per-window impact on connectivity, delay,
//! and the importance of other satellites.
//!
//! Failures are permanent: from the window containing the failure time
//! onward, the failed satellites are removed and every baseline path that
//! traversed one of them is recomputed in the residual graph. The update is
//! incremental over the baseline path index and provably equal to a full
//! recomputation on the residual graphs.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{
    distance_km, ground_cell_position, satellite_position, GroundCell, OrbitalElements, Position,
    EARTH_RADIUS_KM,
};
use crate::routing::{shortest_path, ServiceDemand};
use crate::satb::{Baseline, PathIndex, SatbMatrix};
use crate::temporal_graph::{remove_nodes, SnapshotGraph, TimeWindow};

/// Geographically clustered failure descriptor: `count` spherical regions
/// of `radius_km`, each centered above a ground cell at `altitude_km`.
/// Cells may be given explicitly; otherwise they are drawn uniformly with
/// the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoClusterSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<String>>,
    pub count: usize,
    pub radius_km: f64,
    pub altitude_km: f64,
    pub seed: u64,
}

/// How the failed set was specified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FailureKind {
    Explicit,
    TopK {
        top_k: usize,
    },
    GeoCluster {
        geo: GeoClusterSpec,
        /// Chosen center cells, recorded so the failed set can be
        /// re-derived independently.
        centers: Vec<String>,
    },
}

/// A resolved failure event: the failure instant and the satellite node
/// indices that fail at it.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureEvent {
    pub t_f: f64,
    pub failed: BTreeSet<usize>,
    pub kind: FailureKind,
}

impl FailureEvent {
    pub fn explicit(
        table: &crate::temporal_graph::NodeTable,
        t_f: f64,
        ids: &[String],
    ) -> Result<FailureEvent> {
        let mut failed = BTreeSet::new();
        for id in ids {
            failed.insert(table.require(id)?);
        }
        Ok(FailureEvent {
            t_f,
            failed,
            kind: FailureKind::Explicit,
        })
    }

    /// The first k entries of the ranking row for the window containing
    /// `t_f`.
    pub fn top_k(
        baseline: &Baseline,
        windows: &[TimeWindow],
        t_f: f64,
        k: usize,
    ) -> Result<FailureEvent> {
        let window = window_of(windows, t_f)?;
        let failed: BTreeSet<usize> = baseline.ranking.top_k(window, k)?.into_iter().collect();
        Ok(FailureEvent {
            t_f,
            failed,
            kind: FailureKind::TopK { top_k: k },
        })
    }
}

/// Index of the window containing `t`; the final window is closed on the
/// right.
pub fn window_of(windows: &[TimeWindow], t: f64) -> Result<usize> {
    let last = windows
        .last()
        .ok_or_else(|| Error::Argument("no windows".into()))?;
    if t == last.t_end {
        return Ok(last.index);
    }
    windows
        .iter()
        .find(|w| w.t_start <= t && t < w.t_end)
        .map(|w| w.index)
        .ok_or_else(|| {
            Error::Range(format!(
                "failure time {t} outside horizon [{}, {}]",
                windows[0].t_start, last.t_end
            ))
        })
}

/// Which connectivity series a report presents as its headline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingView {
    /// Pairs whose original path was disrupted count as disconnected.
    NoReroute,
    /// Replacement paths are adopted; residual-graph reachability.
    WithReroute,
}

/// Pre/post delay of every disrupted (window, pair); post is +inf when the
/// pair has no path in the residual graph.
pub type AffectedPathRecord = BTreeMap<(usize, usize), (f64, f64)>;

/// The full impact of one failure event. Pre-failure windows always equal
/// the baseline.
#[derive(Debug, Clone)]
pub struct ImpactReport {
    pub event: FailureEvent,
    /// Window containing the failure instant.
    pub window_f: usize,
    /// Original-path survival per window (percent).
    pub eta_no_reroute: Vec<f64>,
    /// Residual-graph reachability per window (percent).
    pub eta_with_reroute: Vec<f64>,
    /// Mean delay over surviving original paths; `None` when none routed.
    pub mean_delay_no_reroute: Vec<Option<f64>>,
    pub routed_no_reroute: Vec<usize>,
    /// Mean delay once replacement paths are adopted.
    pub mean_delay_with_reroute: Vec<Option<f64>>,
    pub routed_with_reroute: Vec<usize>,
    pub affected_paths: AffectedPathRecord,
    /// Satellites on any removed or replacement path (failed ones appear
    /// via the removed paths).
    pub affected_nodes: BTreeSet<usize>,
    pub updated_matrix: SatbMatrix,
    pub updated_path_index: PathIndex,
    pub view: RoutingView,
}

impl ImpactReport {
    /// The headline connectivity series for this report's view.
    pub fn eta_series(&self) -> &[f64] {
        match self.view {
            RoutingView::NoReroute => &self.eta_no_reroute,
            RoutingView::WithReroute => &self.eta_with_reroute,
        }
    }

    pub fn mean_delay_series(&self) -> (&[Option<f64>], &[usize]) {
        match self.view {
            RoutingView::NoReroute => (&self.mean_delay_no_reroute, &self.routed_no_reroute),
            RoutingView::WithReroute => (&self.mean_delay_with_reroute, &self.routed_with_reroute),
        }
    }

    /// Effective delay of a pair in a window under this report: replacement
    /// delay if disrupted, baseline otherwise, `None` when unroutable.
    pub fn pair_delay(&self, baseline: &Baseline, window: usize, pair: usize) -> Option<f64> {
        if let Some(&(_, post)) = self.affected_paths.get(&(window, pair)) {
            return post.is_finite().then_some(post);
        }
        baseline.window_paths[window].paths[pair]
            .as_ref()
            .map(|p| p.delay_ms)
    }
}

struct WindowOutcome {
    window: usize,
    /// (pair, pre delay, interior satellites of the removed path).
    removed: Vec<(usize, f64, Vec<usize>)>,
    /// (pair, replacement path) for pairs routable in the residual graph.
    replaced: Vec<(usize, crate::routing::ServicePath)>,
}

/// Evaluate a failure event against a precomputed baseline. Headline view:
/// original-path survival.
pub fn evaluate_failure(
    graphs: &[SnapshotGraph],
    demand: &ServiceDemand,
    baseline: &Baseline,
    event: &FailureEvent,
) -> Result<ImpactReport> {
    evaluate(graphs, demand, baseline, event, RoutingView::NoReroute)
}

/// Same machinery as [`evaluate_failure`], but the headline series are the
/// connectivity and mean delay after replacement paths are adopted.
pub fn evaluate_with_rerouting(
    graphs: &[SnapshotGraph],
    demand: &ServiceDemand,
    baseline: &Baseline,
    event: &FailureEvent,
) -> Result<ImpactReport> {
    evaluate(graphs, demand, baseline, event, RoutingView::WithReroute)
}

fn evaluate(
    graphs: &[SnapshotGraph],
    demand: &ServiceDemand,
    baseline: &Baseline,
    event: &FailureEvent,
    view: RoutingView,
) -> Result<ImpactReport> {
    let table = graphs
        .first()
        .ok_or_else(|| Error::Argument("no snapshot graphs".into()))?
        .table();
    if event.failed.is_empty() {
        return Err(Error::Argument("failure event has an empty set".into()));
    }
    for &node in &event.failed {
        if table.satellite_column(node).is_none() {
            return Err(Error::Argument(format!(
                "failed set contains non-satellite '{}'",
                table.id(node)
            )));
        }
    }
    let windows: Vec<TimeWindow> = graphs.iter().map(|g| g.window).collect();
    let window_f = window_of(&windows, event.t_f)?;

    let outcomes: Vec<WindowOutcome> = (window_f..graphs.len())
        .into_par_iter()
        .map(|w| evaluate_window(&graphs[w], baseline, event, w))
        .collect::<Result<Vec<_>>>()?;

    let mut matrix = baseline.matrix.clone();
    let mut path_index = baseline.path_index.clone();
    let mut affected_paths = AffectedPathRecord::new();
    let mut affected_nodes = BTreeSet::new();

    let pair_count = demand.pair_count();
    let baseline_routed: Vec<usize> = baseline
        .window_paths
        .iter()
        .map(|wp| wp.routed_count())
        .collect();

    let mut eta_no = Vec::with_capacity(graphs.len());
    let mut eta_with = Vec::with_capacity(graphs.len());
    let mut mean_no = Vec::with_capacity(graphs.len());
    let mut routed_no = Vec::with_capacity(graphs.len());
    let mut mean_with = Vec::with_capacity(graphs.len());
    let mut routed_with = Vec::with_capacity(graphs.len());

    // Pre-failure windows: untouched baseline.
    for w in 0..window_f {
        let (eta, mean, routed) = baseline_window_stats(baseline, pair_count, w);
        eta_no.push(eta);
        eta_with.push(eta);
        mean_no.push(mean);
        mean_with.push(mean);
        routed_no.push(routed);
        routed_with.push(routed);
    }

    for outcome in &outcomes {
        let w = outcome.window;
        for (pair, pre_delay, interior) in &outcome.removed {
            for &sat in interior {
                let col = table.satellite_column(sat).expect("interior is satellite");
                matrix.rows[w][col] -= 1;
                path_index.remove(sat, w, *pair);
                affected_nodes.insert(sat);
            }
            affected_paths.insert((w, *pair), (*pre_delay, f64::INFINITY));
        }
        for (pair, path) in &outcome.replaced {
            for &sat in path.interior() {
                let col = table.satellite_column(sat).expect("interior is satellite");
                matrix.rows[w][col] += 1;
                path_index.insert(sat, w, *pair);
                affected_nodes.insert(sat);
            }
            let entry = affected_paths
                .get_mut(&(w, *pair))
                .expect("replacement implies removal");
            entry.1 = path.delay_ms;
        }

        let disrupted = outcome.removed.len();
        let unroutable = disrupted - outcome.replaced.len();
        let surviving = baseline_routed[w] - disrupted;
        let routed_resid = baseline_routed[w] - unroutable;
        eta_no.push(ratio(surviving, pair_count));
        eta_with.push(ratio(routed_resid, pair_count));

        // Mean delay over surviving original paths.
        let mut sum_no = 0.0;
        let mut sum_with = 0.0;
        let x_f: BTreeSet<usize> = outcome.removed.iter().map(|r| r.0).collect();
        for (pair, path) in baseline.window_paths[w].paths.iter().enumerate() {
            let Some(path) = path else { continue };
            if !x_f.contains(&pair) {
                sum_no += path.delay_ms;
                sum_with += path.delay_ms;
            }
        }
        for (_, path) in &outcome.replaced {
            sum_with += path.delay_ms;
        }
        mean_no.push((surviving > 0).then(|| sum_no / surviving as f64));
        routed_no.push(surviving);
        mean_with.push((routed_resid > 0).then(|| sum_with / routed_resid as f64));
        routed_with.push(routed_resid);
    }

    Ok(ImpactReport {
        event: event.clone(),
        window_f,
        eta_no_reroute: eta_no,
        eta_with_reroute: eta_with,
        mean_delay_no_reroute: mean_no,
        routed_no_reroute: routed_no,
        mean_delay_with_reroute: mean_with,
        routed_with_reroute: routed_with,
        affected_paths,
        affected_nodes,
        updated_matrix: matrix,
        updated_path_index: path_index,
        view,
    })
}

fn ratio(count: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    count as f64 / total as f64 * 100.0
}

fn baseline_window_stats(
    baseline: &Baseline,
    pair_count: usize,
    w: usize,
) -> (f64, Option<f64>, usize) {
    let wp = &baseline.window_paths[w];
    let routed = wp.routed_count();
    let eta = ratio(routed, pair_count);
    let mean = (routed > 0).then(|| {
        wp.paths
            .iter()
            .flatten()
            .map(|p| p.delay_ms)
            .sum::<f64>()
            / routed as f64
    });
    (eta, mean, routed)
}

fn evaluate_window(
    g: &SnapshotGraph,
    baseline: &Baseline,
    event: &FailureEvent,
    w: usize,
) -> Result<WindowOutcome> {
    // X_F: union of the failed nodes' affected-path lists in this window.
    let mut x_f: BTreeSet<usize> = BTreeSet::new();
    for &f in &event.failed {
        x_f.extend(baseline.path_index.pairs_for(f, w).iter().copied());
    }
    if x_f.is_empty() {
        // No failed node is critical in this window.
        return Ok(WindowOutcome {
            window: w,
            removed: Vec::new(),
            replaced: Vec::new(),
        });
    }
    let residual = remove_nodes(g, &event.failed)?;
    let mut removed = Vec::with_capacity(x_f.len());
    let mut replaced = Vec::new();
    for &pair in &x_f {
        let old = baseline.window_paths[w].paths[pair]
            .as_ref()
            .expect("indexed paths exist");
        removed.push((pair, old.delay_ms, old.interior().to_vec()));
        if let Some(new_path) = shortest_path(&residual, old.src, old.dst)? {
            replaced.push((pair, new_path));
        }
    }
    Ok(WindowOutcome {
        window: w,
        removed,
        replaced,
    })
}

/// Build a geographically clustered failure event: satellites within
/// `radius_km` of any region center at `t_f` fail. An empty result is a
/// valid no-op event, distinct from an argument error.
pub fn geo_cluster_failure(
    satellites: &[(String, OrbitalElements)],
    cells: &[GroundCell],
    table: &crate::temporal_graph::NodeTable,
    t_f: f64,
    spec: &GeoClusterSpec,
) -> Result<FailureEvent> {
    if spec.radius_km <= 0.0 {
        return Err(Error::Argument("geo radius_km must be > 0".into()));
    }
    if cells.is_empty() {
        return Err(Error::Argument("geo cluster needs ground cells".into()));
    }
    let centers: Vec<&GroundCell> = match &spec.cells {
        Some(ids) => {
            let mut out = Vec::with_capacity(ids.len());
            for id in ids {
                out.push(
                    cells
                        .iter()
                        .find(|c| &c.id == id)
                        .ok_or_else(|| Error::Argument(format!("unknown cell '{id}'")))?,
                );
            }
            out
        }
        None => {
            // Seed-deterministic uniform picks over cells sorted by id.
            let mut sorted: Vec<&GroundCell> = cells.iter().collect();
            sorted.sort_by(|a, b| a.id.cmp(&b.id));
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            (0..spec.count)
                .map(|_| sorted[(rng.next_u64() % sorted.len() as u64) as usize])
                .collect()
        }
    };

    let center_positions: Vec<Position> = centers
        .iter()
        .map(|c| {
            let p = ground_cell_position(c, t_f);
            let scale = (EARTH_RADIUS_KM + spec.altitude_km) / EARTH_RADIUS_KM;
            [p[0] * scale, p[1] * scale, p[2] * scale]
        })
        .collect();

    let mut failed = BTreeSet::new();
    for (id, elem) in satellites {
        let pos = satellite_position(elem, t_f);
        if center_positions
            .iter()
            .any(|&c| distance_km(pos, c) <= spec.radius_km)
        {
            failed.insert(table.require(id)?);
        }
    }
    Ok(FailureEvent {
        t_f,
        failed,
        kind: FailureKind::GeoCluster {
            geo: spec.clone(),
            centers: centers.iter().map(|c| c.id.clone()).collect(),
        },
    })
}
