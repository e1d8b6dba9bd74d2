//! Discretization of a contact plan into per-window snapshot graphs, and
//! node removal for failure analysis.
//!
//! A window's snapshot contains a directed edge (u, v) iff some contact for
//! (u, v) fully covers the window. All declared nodes are present and
//! available in every snapshot; removals flip availability flags and never
//! re-partition the windows.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact_plan::{ContactPlan, NodeKind};
use crate::error::{Error, Result};

/// Immutable node index shared by every snapshot of a scenario. Nodes are
/// ordered by id, so index order and lexicographic id order coincide.
#[derive(Debug)]
pub struct NodeTable {
    ids: Vec<String>,
    kinds: Vec<NodeKind>,
    geodetic: Vec<Option<(f64, f64)>>,
    by_id: HashMap<String, usize>,
    satellites: Vec<usize>,
    sat_col: Vec<Option<usize>>,
}

impl NodeTable {
    pub fn from_plan(plan: &ContactPlan) -> Arc<NodeTable> {
        let mut nodes = plan.nodes.clone();
        nodes.sort_by(|a, b| a.id.cmp(&b.id));
        let ids: Vec<String> = nodes.iter().map(|n| n.id.clone()).collect();
        let kinds: Vec<NodeKind> = nodes.iter().map(|n| n.kind).collect();
        let geodetic: Vec<Option<(f64, f64)>> = nodes
            .iter()
            .map(|n| match (n.lat, n.lon) {
                (Some(lat), Some(lon)) => Some((lat, lon)),
                _ => None,
            })
            .collect();
        let by_id: HashMap<String, usize> = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        let satellites: Vec<usize> = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == NodeKind::Satellite)
            .map(|(i, _)| i)
            .collect();
        let mut sat_col = vec![None; ids.len()];
        for (col, &node) in satellites.iter().enumerate() {
            sat_col[node] = Some(col);
        }
        Arc::new(NodeTable {
            ids,
            kinds,
            geodetic,
            by_id,
            satellites,
            sat_col,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn geodetic(&self, idx: usize) -> Option<(f64, f64)> {
        self.geodetic[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }

    pub fn require(&self, id: &str) -> Result<usize> {
        self.index_of(id)
            .ok_or_else(|| Error::Argument(format!("unknown node '{id}'")))
    }

    /// Node indices of all satellites, ascending (== id order).
    pub fn satellites(&self) -> &[usize] {
        &self.satellites
    }

    /// Column of a satellite in the SATB matrix, if the node is a satellite.
    pub fn satellite_column(&self, idx: usize) -> Option<usize> {
        self.sat_col.get(idx).copied().flatten()
    }
}

/// One interval of the tiled horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl TimeWindow {
    pub fn duration_s(&self) -> f64 {
        self.t_end - self.t_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnapshotEdge {
    pub to: usize,
    pub delay_ms: f64,
    pub available: bool,
}

/// The static directed graph of one time window.
#[derive(Debug, Clone)]
pub struct SnapshotGraph {
    pub window: TimeWindow,
    table: Arc<NodeTable>,
    node_available: Vec<bool>,
    adj: Vec<Vec<SnapshotEdge>>,
}

impl SnapshotGraph {
    pub fn table(&self) -> &Arc<NodeTable> {
        &self.table
    }

    pub fn node_count(&self) -> usize {
        self.table.len()
    }

    pub fn is_available(&self, node: usize) -> bool {
        self.node_available[node]
    }

    /// All stored edges from `node`, including unavailable ones.
    pub fn raw_edges_from(&self, node: usize) -> &[SnapshotEdge] {
        &self.adj[node]
    }

    /// Usable edges from `node`: the edge and both endpoints available.
    pub fn edges_from(&self, node: usize) -> impl Iterator<Item = &SnapshotEdge> + '_ {
        let from_ok = self.node_available[node];
        self.adj[node]
            .iter()
            .filter(move |e| from_ok && e.available && self.node_available[e.to])
    }

    /// Delay of the usable edge (from, to) if present.
    pub fn edge_delay(&self, from: usize, to: usize) -> Option<f64> {
        self.edges_from(from)
            .find(|e| e.to == to)
            .map(|e| e.delay_ms)
    }

    pub fn available_edge_count(&self) -> usize {
        (0..self.node_count()).map(|v| self.edges_from(v).count()).sum()
    }

    /// Debug export: nodes, edges, and delays of this window as JSON.
    pub fn to_json(&self) -> serde_json::Value {
        let nodes: Vec<serde_json::Value> = (0..self.node_count())
            .map(|i| {
                serde_json::json!({
                    "id": self.table.id(i),
                    "kind": self.table.kind(i).to_string(),
                    "available": self.node_available[i],
                })
            })
            .collect();
        let mut edges = Vec::new();
        for from in 0..self.node_count() {
            for e in &self.adj[from] {
                edges.push(serde_json::json!({
                    "from": self.table.id(from),
                    "to": self.table.id(e.to),
                    "delay_ms": e.delay_ms,
                    "available": e.available,
                }));
            }
        }
        serde_json::json!({
            "window": self.window,
            "nodes": nodes,
            "edges": edges,
        })
    }
}

/// Collect every distinct contact start/end moment plus the horizon
/// endpoints, in strictly increasing order.
pub fn collect_boundaries(plan: &ContactPlan) -> Vec<f64> {
    let mut moments: Vec<f64> = Vec::with_capacity(plan.contacts.len() * 2 + 2);
    moments.push(plan.horizon.0);
    moments.push(plan.horizon.1);
    for c in &plan.contacts {
        moments.push(c.t_start);
        moments.push(c.t_end);
    }
    moments.sort_by(|a, b| a.total_cmp(b));
    moments.dedup();
    moments
}

/// Merge raw boundaries into windows of at least `threshold_s` by greedy
/// left-to-right accumulation: a window extends across boundaries until its
/// span reaches the threshold, then closes at that boundary. Only the final
/// remainder window may be shorter.
pub fn merge_windows(boundaries: &[f64], threshold_s: f64) -> Result<Vec<TimeWindow>> {
    if boundaries.len() < 2 {
        return Err(Error::Argument(
            "need at least two boundaries to form windows".into(),
        ));
    }
    if threshold_s <= 0.0 {
        return Err(Error::Argument("threshold_s must be > 0".into()));
    }
    let mut windows = Vec::new();
    let mut start = boundaries[0];
    for (i, &b) in boundaries.iter().enumerate().skip(1) {
        let is_last = i == boundaries.len() - 1;
        if b - start >= threshold_s || is_last {
            windows.push(TimeWindow {
                index: windows.len(),
                t_start: start,
                t_end: b,
            });
            start = b;
        }
    }
    Ok(windows)
}

/// Build one snapshot per window. An edge enters a snapshot iff a contact
/// for that ordered pair covers the whole window; when several contacts
/// cover it, the minimum delay wins.
pub fn discretize(plan: &ContactPlan, windows: &[TimeWindow]) -> Result<Vec<SnapshotGraph>> {
    if windows.is_empty() {
        return Err(Error::Argument("window list is empty".into()));
    }
    let eps = 1e-9;
    if (windows[0].t_start - plan.horizon.0).abs() > eps
        || (windows[windows.len() - 1].t_end - plan.horizon.1).abs() > eps
    {
        return Err(Error::Argument(format!(
            "windows [{}, {}] do not tile the plan horizon [{}, {}]",
            windows[0].t_start,
            windows[windows.len() - 1].t_end,
            plan.horizon.0,
            plan.horizon.1
        )));
    }
    for pair in windows.windows(2) {
        if (pair[0].t_end - pair[1].t_start).abs() > eps {
            return Err(Error::Argument(format!(
                "gap between window {} and {}",
                pair[0].index, pair[1].index
            )));
        }
    }

    let table = NodeTable::from_plan(plan);
    let snapshots = windows
        .par_iter()
        .map(|w| {
            let mut adj: Vec<Vec<SnapshotEdge>> = vec![Vec::new(); table.len()];
            for c in &plan.contacts {
                if c.t_start <= w.t_start && c.t_end >= w.t_end {
                    let from = table.index_of(&c.from).expect("validated plan");
                    let to = table.index_of(&c.to).expect("validated plan");
                    match adj[from].iter_mut().find(|e| e.to == to) {
                        Some(e) => e.delay_ms = e.delay_ms.min(c.delay_ms),
                        None => adj[from].push(SnapshotEdge {
                            to,
                            delay_ms: c.delay_ms,
                            available: true,
                        }),
                    }
                }
            }
            for edges in &mut adj {
                edges.sort_by_key(|e| e.to);
            }
            SnapshotGraph {
                window: *w,
                table: Arc::clone(&table),
                node_available: vec![true; table.len()],
                adj,
            }
        })
        .collect();
    Ok(snapshots)
}

/// Return a copy of the snapshot with the given satellites removed:
/// availability flags of the nodes and all incident edges drop to 0.
/// Only satellites fail in this model; removing a cell is rejected.
pub fn remove_nodes(snapshot: &SnapshotGraph, removed: &BTreeSet<usize>) -> Result<SnapshotGraph> {
    for &node in removed {
        if node >= snapshot.node_count() {
            return Err(Error::Argument(format!("node index {node} out of range")));
        }
        if snapshot.table.kind(node) == NodeKind::Cell {
            return Err(Error::Argument(format!(
                "cannot remove ground cell '{}'",
                snapshot.table.id(node)
            )));
        }
    }
    let mut out = snapshot.clone();
    for &node in removed {
        out.node_available[node] = false;
    }
    for (from, edges) in out.adj.iter_mut().enumerate() {
        for e in edges.iter_mut() {
            if removed.contains(&from) || removed.contains(&e.to) {
                e.available = false;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact_plan::{Contact, ContactPlan, NodeRecord};

    const EPOCH: &str = "2024-10-09T04:00:00Z";

    /// The three-contact relay example: C1-S1 [0,15], S1-S2 [5,15],
    /// S2-C2 [10,20].
    fn relay_plan() -> ContactPlan {
        let nodes = vec![
            NodeRecord::cell("C1", 0.0, 0.0),
            NodeRecord::cell("C2", 0.0, 10.0),
            NodeRecord::satellite("S1"),
            NodeRecord::satellite("S2"),
        ];
        let mut contacts = Vec::new();
        for (a, b, s, e) in [
            ("C1", "S1", 0.0, 15.0),
            ("S1", "S2", 5.0, 15.0),
            ("S2", "C2", 10.0, 20.0),
        ] {
            contacts.push(Contact::new(s, e, a, b, 5.0));
            contacts.push(Contact::new(s, e, b, a, 5.0));
        }
        ContactPlan::new(EPOCH, (0.0, 20.0), nodes, contacts).unwrap()
    }

    #[test]
    fn boundaries_of_relay_plan() {
        let b = collect_boundaries(&relay_plan());
        assert_eq!(b, vec![0.0, 5.0, 10.0, 15.0, 20.0]);
    }

    #[test]
    fn boundaries_of_empty_plan_are_horizon() {
        let plan = ContactPlan::new(
            EPOCH,
            (0.0, 100.0),
            vec![NodeRecord::satellite("S1"), NodeRecord::cell("C1", 0.0, 0.0)],
            vec![],
        )
        .unwrap();
        assert_eq!(collect_boundaries(&plan), vec![0.0, 100.0]);
    }

    #[test]
    fn duplicate_moments_collapse() {
        let plan = relay_plan();
        let b = collect_boundaries(&plan);
        let mut dedup = b.clone();
        dedup.dedup();
        assert_eq!(b, dedup);
    }

    #[test]
    fn merge_threshold_larger_than_horizon_gives_one_window() {
        let w = merge_windows(&[0.0, 5.0, 10.0, 15.0, 20.0], 60.0).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!((w[0].t_start, w[0].t_end), (0.0, 20.0));
    }

    #[test]
    fn merge_greedy_rule_hand_trace() {
        let w = merge_windows(&[0.0, 30.0, 70.0, 120.0, 130.0, 190.0], 60.0).unwrap();
        let spans: Vec<(f64, f64)> = w.iter().map(|w| (w.t_start, w.t_end)).collect();
        assert_eq!(spans, vec![(0.0, 70.0), (70.0, 130.0), (130.0, 190.0)]);
    }

    #[test]
    fn merge_tiny_threshold_keeps_raw_intervals() {
        let b = vec![0.0, 5.0, 10.0, 15.0, 20.0];
        let w = merge_windows(&b, 1e-9).unwrap();
        assert_eq!(w.len(), 4);
        for (i, win) in w.iter().enumerate() {
            assert_eq!(win.t_start, b[i]);
            assert_eq!(win.t_end, b[i + 1]);
            assert_eq!(win.index, i);
        }
    }

    #[test]
    fn relay_edges_co_present_only_in_expected_window() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[0].table();
        let (c1, s1, s2, c2) = (
            t.require("C1").unwrap(),
            t.require("S1").unwrap(),
            t.require("S2").unwrap(),
            t.require("C2").unwrap(),
        );
        let has_all = |g: &SnapshotGraph| {
            g.edge_delay(c1, s1).is_some()
                && g.edge_delay(s1, s2).is_some()
                && g.edge_delay(s2, c2).is_some()
        };
        let full: Vec<usize> = graphs
            .iter()
            .filter(|g| has_all(g))
            .map(|g| g.window.index)
            .collect();
        // Only [10, 15] holds all three edges.
        assert_eq!(full, vec![2]);
        assert_eq!((graphs[2].window.t_start, graphs[2].window.t_end), (10.0, 15.0));
    }

    #[test]
    fn partial_coverage_excludes_edge() {
        let plan = relay_plan();
        // One coarse window [0,20]: no contact covers it fully.
        let windows = merge_windows(&[0.0, 20.0], 60.0).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        assert_eq!(graphs[0].available_edge_count(), 0);
    }

    #[test]
    fn contact_spanning_windows_is_present_in_each() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[0].table();
        let (c1, s1) = (t.require("C1").unwrap(), t.require("S1").unwrap());
        // C1-S1 covers [0,15]: windows [0,5], [5,10], [10,15].
        let present: Vec<usize> = graphs
            .iter()
            .filter(|g| g.edge_delay(c1, s1).is_some())
            .map(|g| g.window.index)
            .collect();
        assert_eq!(present, vec![0, 1, 2]);
    }

    #[test]
    fn overlapping_contacts_take_minimum_delay() {
        let nodes = vec![NodeRecord::satellite("S1"), NodeRecord::satellite("S2")];
        let contacts = vec![
            Contact::new(0.0, 20.0, "S1", "S2", 9.0),
            Contact::new(0.0, 10.0, "S1", "S2", 4.0),
        ];
        let plan = ContactPlan::new(EPOCH, (0.0, 20.0), nodes, contacts).unwrap();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[0].table();
        let (s1, s2) = (t.require("S1").unwrap(), t.require("S2").unwrap());
        assert_eq!(graphs[0].edge_delay(s1, s2), Some(4.0));
        assert_eq!(graphs[1].edge_delay(s1, s2), Some(9.0));
    }

    #[test]
    fn remove_empty_set_is_identity() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let removed = BTreeSet::new();
        let out = remove_nodes(&graphs[2], &removed).unwrap();
        assert_eq!(out.available_edge_count(), graphs[2].available_edge_count());
    }

    #[test]
    fn remove_all_satellites_leaves_no_edges() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[2].table();
        let removed: BTreeSet<usize> = t.satellites().iter().copied().collect();
        let out = remove_nodes(&graphs[2], &removed).unwrap();
        assert_eq!(out.available_edge_count(), 0);
        for &s in t.satellites() {
            assert!(!out.is_available(s));
        }
        // Original untouched.
        assert!(graphs[2].available_edge_count() > 0);
    }

    #[test]
    fn removing_cell_is_rejected() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let cell = graphs[0].table().require("C1").unwrap();
        let removed: BTreeSet<usize> = [cell].into_iter().collect();
        assert!(remove_nodes(&graphs[0], &removed).is_err());
    }

    #[test]
    fn star_center_removal_kills_all_edges() {
        let nodes = vec![
            NodeRecord::satellite("S0"),
            NodeRecord::satellite("S1"),
            NodeRecord::satellite("S2"),
            NodeRecord::satellite("S3"),
        ];
        let mut contacts = Vec::new();
        for leaf in ["S1", "S2", "S3"] {
            contacts.push(Contact::new(0.0, 10.0, "S0", leaf, 1.0));
            contacts.push(Contact::new(0.0, 10.0, leaf, "S0", 1.0));
        }
        let plan = ContactPlan::new(EPOCH, (0.0, 10.0), nodes, contacts).unwrap();
        let windows = merge_windows(&collect_boundaries(&plan), 60.0).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let center = graphs[0].table().require("S0").unwrap();
        let removed: BTreeSet<usize> = [center].into_iter().collect();
        let out = remove_nodes(&graphs[0], &removed).unwrap();
        assert_eq!(out.available_edge_count(), 0);
    }

    #[test]
    fn removal_composes_as_union() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[2].table();
        let a: BTreeSet<usize> = [t.require("S1").unwrap()].into_iter().collect();
        let b: BTreeSet<usize> = [t.require("S2").unwrap()].into_iter().collect();
        let ab: BTreeSet<usize> = a.union(&b).copied().collect();
        let seq = remove_nodes(&remove_nodes(&graphs[2], &a).unwrap(), &b).unwrap();
        let joint = remove_nodes(&graphs[2], &ab).unwrap();
        assert_eq!(seq.available_edge_count(), joint.available_edge_count());
        for v in 0..seq.node_count() {
            assert_eq!(seq.is_available(v), joint.is_available(v));
        }
    }

    #[test]
    fn no_available_edge_has_unavailable_endpoint() {
        let plan = relay_plan();
        let windows = merge_windows(&collect_boundaries(&plan), 1e-9).unwrap();
        let graphs = discretize(&plan, &windows).unwrap();
        let t = graphs[2].table();
        let removed: BTreeSet<usize> = [t.require("S1").unwrap()].into_iter().collect();
        let g = remove_nodes(&graphs[2], &removed).unwrap();
        for from in 0..g.node_count() {
            for e in g.raw_edges_from(from) {
                if e.available {
                    assert!(g.is_available(from) && g.is_available(e.to));
                }
            }
        }
    }

    #[test]
    fn windows_tile_the_horizon() {
        let plan = relay_plan();
        let b = collect_boundaries(&plan);
        for threshold in [1e-9, 7.0, 60.0] {
            let w = merge_windows(&b, threshold).unwrap();
            assert_eq!(w[0].t_start, 0.0);
            assert_eq!(w[w.len() - 1].t_end, 20.0);
            let total: f64 = w.iter().map(|w| w.duration_s()).sum();
            assert!((total - 20.0).abs() < 1e-9);
            for pair in w.windows(2) {
                assert_eq!(pair[0].t_end, pair[1].t_start);
            }
        }
    }
}
