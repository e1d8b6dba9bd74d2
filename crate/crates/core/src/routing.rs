//! Per-window shortest-delay path computation for designated service pairs.
//!
//! Paths run cell -> satellites -> cell; ground cells never relay traffic.
//! Among equal-delay paths the unique winner is picked by fewest hops, then
//! the lexicographically smallest hop-id sequence, so results are stable
//! across runs and worker counts.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::contact_plan::NodeKind;
use crate::error::{Error, Result};
use crate::temporal_graph::{NodeTable, SnapshotGraph};

/// The designated service pairs over the active cells. Pairs are unordered
/// and each is routed once per window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceDemand {
    /// Active cell node indices, ascending.
    active_cells: Vec<usize>,
    /// Unordered pairs (i, j) with i < j, sorted; the set H.
    pairs: Vec<(usize, usize)>,
}

impl ServiceDemand {
    /// Demand between every pair of the given cells (the full-mesh
    /// indicator matrix).
    pub fn full_mesh(table: &NodeTable, cell_ids: &[String]) -> Result<ServiceDemand> {
        let cells = resolve_cells(table, cell_ids)?;
        let mut pairs = Vec::new();
        for (a, &i) in cells.iter().enumerate() {
            for &j in cells.iter().skip(a + 1) {
                pairs.push((i, j));
            }
        }
        Ok(ServiceDemand {
            active_cells: cells,
            pairs,
        })
    }

    /// Demand for an explicit pair list. Pair order and direction are
    /// normalized; duplicates collapse; self-pairs are rejected.
    pub fn from_pairs(table: &NodeTable, pair_ids: &[(String, String)]) -> Result<ServiceDemand> {
        let mut cells = Vec::new();
        let mut pairs = Vec::new();
        for (a, b) in pair_ids {
            if a == b {
                return Err(Error::Validation(format!(
                    "self service pair ({a}, {b}) not allowed"
                )));
            }
            let ia = resolve_cell(table, a)?;
            let ib = resolve_cell(table, b)?;
            let p = (ia.min(ib), ia.max(ib));
            pairs.push(p);
            cells.push(ia);
            cells.push(ib);
        }
        pairs.sort();
        pairs.dedup();
        cells.sort();
        cells.dedup();
        Ok(ServiceDemand {
            active_cells: cells,
            pairs,
        })
    }

    pub fn active_cells(&self) -> &[usize] {
        &self.active_cells
    }

    /// The unordered pair set H, sorted.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }
}

fn resolve_cell(table: &NodeTable, id: &str) -> Result<usize> {
    let idx = table.require(id)?;
    if table.kind(idx) != NodeKind::Cell {
        return Err(Error::Argument(format!("node '{id}' is not a ground cell")));
    }
    Ok(idx)
}

fn resolve_cells(table: &NodeTable, ids: &[String]) -> Result<Vec<usize>> {
    let mut cells = Vec::with_capacity(ids.len());
    for id in ids {
        cells.push(resolve_cell(table, id)?);
    }
    cells.sort();
    cells.dedup();
    Ok(cells)
}

/// A routed service path in one window. `hops` runs from the source cell to
/// the destination cell; interior entries are satellites.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServicePath {
    pub window: usize,
    pub src: usize,
    pub dst: usize,
    pub hops: Vec<usize>,
    pub delay_ms: f64,
}

impl ServicePath {
    /// Interior (satellite) node indices.
    pub fn interior(&self) -> &[usize] {
        &self.hops[1..self.hops.len() - 1]
    }

    pub fn contains(&self, node: usize) -> bool {
        self.interior().contains(&node)
    }
}

/// Search-count instrumentation for complexity assertions in tests.
#[cfg(feature = "testkit")]
pub mod instrument {
    use std::sync::atomic::{AtomicUsize, Ordering};

    pub static SEARCH_COUNT: AtomicUsize = AtomicUsize::new(0);

    pub fn reset() {
        SEARCH_COUNT.store(0, Ordering::SeqCst);
    }

    pub fn searches() -> usize {
        SEARCH_COUNT.load(Ordering::SeqCst)
    }
}

/// Sum of edge delays along `hops` in `g`; `None` if some edge is missing.
pub fn path_delay(g: &SnapshotGraph, hops: &[usize]) -> Option<f64> {
    let mut total = 0.0;
    for pair in hops.windows(2) {
        total += g.edge_delay(pair[0], pair[1])?;
    }
    Some(total)
}

struct QueueEntry {
    delay: f64,
    hops: u32,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for QueueEntry {}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for QueueEntry {
    // Reversed so the BinaryHeap pops the smallest (delay, hops) first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .delay
            .total_cmp(&self.delay)
            .then_with(|| other.hops.cmp(&self.hops))
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn rebuild_sequence(parent: &[Option<usize>], mut node: usize) -> Vec<usize> {
    let mut seq = vec![node];
    while let Some(p) = parent[node] {
        seq.push(p);
        node = p;
    }
    seq.reverse();
    seq
}

/// Minimum-delay path from `src` to `dst` whose interior nodes are
/// satellites, with the deterministic tie-break. `None` if disconnected.
///
/// Node indices follow id order (the table is id-sorted), so comparing
/// index sequences is exactly the lexicographic hop-id comparison.
pub fn shortest_path(g: &SnapshotGraph, src: usize, dst: usize) -> Result<Option<ServicePath>> {
    #[cfg(feature = "testkit")]
    instrument::SEARCH_COUNT.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
    let table = g.table();
    if src == dst {
        return Err(Error::Argument(format!(
            "source equals destination '{}'",
            table.id(src)
        )));
    }
    for node in [src, dst] {
        if node >= g.node_count() {
            return Err(Error::Argument(format!("node index {node} out of range")));
        }
        if table.kind(node) != NodeKind::Cell {
            return Err(Error::Argument(format!(
                "endpoint '{}' is not a ground cell",
                table.id(node)
            )));
        }
        if !g.is_available(node) {
            return Err(Error::Argument(format!(
                "endpoint '{}' is not available",
                table.id(node)
            )));
        }
    }

    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![u32::MAX; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    hops[src] = 0;
    heap.push(QueueEntry {
        delay: 0.0,
        hops: 0,
        node: src,
    });

    while let Some(QueueEntry { node, .. }) = heap.pop() {
        if settled[node] {
            continue;
        }
        settled[node] = true;
        if node == dst {
            break;
        }
        // Cells other than the source never relay.
        if node != src && table.kind(node) == NodeKind::Cell {
            continue;
        }
        for e in g.edges_from(node) {
            let next = e.to;
            if settled[next] {
                continue;
            }
            // Only the destination cell may be entered; satellites are free.
            if table.kind(next) == NodeKind::Cell && next != dst {
                continue;
            }
            let cand_delay = dist[node] + e.delay_ms;
            let cand_hops = hops[node] + 1;
            match cand_delay
                .total_cmp(&dist[next])
                .then_with(|| cand_hops.cmp(&hops[next]))
            {
                Ordering::Less => {
                    dist[next] = cand_delay;
                    hops[next] = cand_hops;
                    parent[next] = Some(node);
                    heap.push(QueueEntry {
                        delay: cand_delay,
                        hops: cand_hops,
                        node: next,
                    });
                }
                Ordering::Equal => {
                    // Exact (delay, hops) tie: keep the lexicographically
                    // smaller hop sequence. Both candidate parents are
                    // settled (positive delays), so their sequences are
                    // final and equal-length.
                    let current = parent[next].expect("tie implies an existing label");
                    if rebuild_sequence(&parent, node) < rebuild_sequence(&parent, current) {
                        parent[next] = Some(node);
                    }
                }
                Ordering::Greater => {}
            }
        }
    }

    if !dist[dst].is_finite() {
        return Ok(None);
    }
    let hops_seq = rebuild_sequence(&parent, dst);
    Ok(Some(ServicePath {
        window: g.window.index,
        src,
        dst,
        hops: hops_seq,
        delay_ms: dist[dst],
    }))
}

/// Routed paths of one window, aligned with the demand's pair list.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowPaths {
    pub window: usize,
    pub paths: Vec<Option<ServicePath>>,
}

impl WindowPaths {
    pub fn routed_count(&self) -> usize {
        self.paths.iter().filter(|p| p.is_some()).count()
    }
}

/// Route every pair of the demand in this snapshot.
pub fn all_service_paths(g: &SnapshotGraph, demand: &ServiceDemand) -> Result<WindowPaths> {
    let mut paths = Vec::with_capacity(demand.pair_count());
    for &(a, b) in demand.pairs() {
        paths.push(shortest_path(g, a, b)?);
    }
    Ok(WindowPaths {
        window: g.window.index,
        paths,
    })
}

/// Service connectivity ratio: percentage of pairs with a present path.
/// Undefined (an error) when the pair set is empty.
pub fn connectivity_ratio(paths: &WindowPaths, pair_count: usize) -> Result<f64> {
    if pair_count == 0 {
        return Err(Error::UndefinedRatio);
    }
    Ok(paths.routed_count() as f64 / pair_count as f64 * 100.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact_plan::{Contact, ContactPlan, NodeRecord};
    use crate::temporal_graph::{collect_boundaries, discretize, merge_windows};

    const EPOCH: &str = "2024-10-09T04:00:00Z";

    /// Build a single-window snapshot from undirected weighted edges.
    fn snapshot(nodes: &[(&str, NodeKind)], edges: &[(&str, &str, f64)]) -> SnapshotGraph {
        let recs: Vec<NodeRecord> = nodes
            .iter()
            .map(|(id, kind)| match kind {
                NodeKind::Satellite => NodeRecord::satellite(*id),
                NodeKind::Cell => NodeRecord::cell(*id, 0.0, 0.0),
            })
            .collect();
        let mut contacts = Vec::new();
        for (a, b, d) in edges {
            contacts.push(Contact::new(0.0, 100.0, *a, *b, *d));
            contacts.push(Contact::new(0.0, 100.0, *b, *a, *d));
        }
        let plan = ContactPlan::new(EPOCH, (0.0, 100.0), recs, contacts).unwrap();
        let windows = merge_windows(&collect_boundaries(&plan), 200.0).unwrap();
        discretize(&plan, &windows).unwrap().remove(0)
    }

    use crate::contact_plan::NodeKind::{Cell, Satellite};

    #[test]
    fn single_chain_path() {
        let g = snapshot(
            &[("C1", Cell), ("C2", Cell), ("S1", Satellite)],
            &[("C1", "S1", 6.0), ("S1", "C2", 7.0)],
        );
        let t = g.table();
        let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap())
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = p.hops.iter().map(|&h| t.id(h)).collect();
        assert_eq!(ids, vec!["C1", "S1", "C2"]);
        assert_eq!(p.delay_ms, 13.0);
    }

    #[test]
    fn equal_delay_routes_pick_lexicographically_smaller() {
        // Two disjoint 2-hop routes with identical delay; S1 < S2.
        let g = snapshot(
            &[("C1", Cell), ("C2", Cell), ("S1", Satellite), ("S2", Satellite)],
            &[
                ("C1", "S1", 5.0),
                ("S1", "C2", 5.0),
                ("C1", "S2", 5.0),
                ("S2", "C2", 5.0),
            ],
        );
        let t = g.table();
        for _ in 0..4 {
            let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap())
                .unwrap()
                .unwrap();
            let ids: Vec<&str> = p.hops.iter().map(|&h| t.id(h)).collect();
            assert_eq!(ids, vec!["C1", "S1", "C2"]);
        }
    }

    #[test]
    fn fewer_hops_beats_equal_delay() {
        // Direct relay delay 10 vs two-hop delay 10: 2 edges beat 3.
        let g = snapshot(
            &[
                ("C1", Cell),
                ("C2", Cell),
                ("S1", Satellite),
                ("S2", Satellite),
                ("S3", Satellite),
            ],
            &[
                ("C1", "S3", 5.0),
                ("S3", "C2", 5.0),
                ("C1", "S1", 3.0),
                ("S1", "S2", 3.0),
                ("S2", "C2", 4.0),
            ],
        );
        let t = g.table();
        let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap())
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = p.hops.iter().map(|&h| t.id(h)).collect();
        assert_eq!(ids, vec!["C1", "S3", "C2"]);
    }

    #[test]
    fn disconnected_pair_is_absent() {
        let g = snapshot(
            &[("C1", Cell), ("C2", Cell), ("S1", Satellite)],
            &[("C1", "S1", 6.0)],
        );
        let t = g.table();
        let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap()).unwrap();
        assert!(p.is_none());
    }

    #[test]
    fn cells_do_not_relay() {
        // Path through C3 would be cheapest; it must be refused in favor of
        // the satellite route.
        let g = snapshot(
            &[
                ("C1", Cell),
                ("C2", Cell),
                ("C3", Cell),
                ("S1", Satellite),
                ("S2", Satellite),
            ],
            &[
                ("C1", "S1", 1.0),
                ("S1", "C3", 1.0),
                ("C3", "S2", 1.0),
                ("S2", "C2", 1.0),
                ("C1", "S1", 1.0),
                ("S1", "S2", 50.0),
            ],
        );
        let t = g.table();
        let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap())
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = p.hops.iter().map(|&h| t.id(h)).collect();
        assert_eq!(ids, vec!["C1", "S1", "S2", "C2"]);
        assert_eq!(p.delay_ms, 52.0);
    }

    #[test]
    fn src_equals_dst_is_an_error() {
        let g = snapshot(&[("C1", Cell), ("S1", Satellite)], &[("C1", "S1", 1.0)]);
        let c1 = g.table().require("C1").unwrap();
        assert!(shortest_path(&g, c1, c1).is_err());
    }

    #[test]
    fn satellite_endpoint_is_an_error() {
        let g = snapshot(
            &[("C1", Cell), ("S1", Satellite)],
            &[("C1", "S1", 1.0)],
        );
        let t = g.table();
        let err = shortest_path(&g, t.require("C1").unwrap(), t.require("S1").unwrap());
        assert!(err.is_err());
    }

    #[test]
    fn full_mesh_pair_counts() {
        let mut nodes: Vec<(String, NodeKind)> = Vec::new();
        let mut recs = Vec::new();
        for i in 0..30 {
            let id = format!("C{i:02}");
            nodes.push((id.clone(), Cell));
            recs.push(NodeRecord::cell(id, 0.0, i as f64));
        }
        let plan = ContactPlan::new(EPOCH, (0.0, 10.0), recs, vec![]).unwrap();
        let windows = merge_windows(&collect_boundaries(&plan), 60.0).unwrap();
        let g = discretize(&plan, &windows).unwrap().remove(0);
        let ids: Vec<String> = nodes.iter().map(|(id, _)| id.clone()).collect();
        let demand = ServiceDemand::full_mesh(g.table(), &ids).unwrap();
        assert_eq!(demand.pair_count(), 435);
        let paths = all_service_paths(&g, &demand).unwrap();
        assert_eq!(paths.paths.len(), 435);
        assert_eq!(paths.routed_count(), 0);
    }

    #[test]
    fn empty_pair_set_gives_empty_map_and_undefined_ratio() {
        let g = snapshot(&[("C1", Cell), ("S1", Satellite)], &[("C1", "S1", 1.0)]);
        let demand = ServiceDemand::from_pairs(g.table(), &[]).unwrap();
        let paths = all_service_paths(&g, &demand).unwrap();
        assert!(paths.paths.is_empty());
        assert!(matches!(
            connectivity_ratio(&paths, 0),
            Err(Error::UndefinedRatio)
        ));
    }

    #[test]
    fn connectivity_ratio_three_of_four() {
        let paths = WindowPaths {
            window: 0,
            paths: vec![
                Some(ServicePath {
                    window: 0,
                    src: 0,
                    dst: 1,
                    hops: vec![0, 2, 1],
                    delay_ms: 1.0,
                }),
                None,
                Some(ServicePath {
                    window: 0,
                    src: 0,
                    dst: 1,
                    hops: vec![0, 2, 1],
                    delay_ms: 1.0,
                }),
                Some(ServicePath {
                    window: 0,
                    src: 0,
                    dst: 1,
                    hops: vec![0, 2, 1],
                    delay_ms: 1.0,
                }),
            ],
        };
        assert_eq!(connectivity_ratio(&paths, 4).unwrap(), 75.0);
    }

    #[test]
    fn path_delay_sums_edges() {
        let g = snapshot(
            &[("C1", Cell), ("C2", Cell), ("S1", Satellite)],
            &[("C1", "S1", 7.0), ("S1", "C2", 9.0)],
        );
        let t = g.table();
        let hops = vec![
            t.require("C1").unwrap(),
            t.require("S1").unwrap(),
            t.require("C2").unwrap(),
        ];
        assert_eq!(path_delay(&g, &hops), Some(16.0));
    }

    #[test]
    fn demand_normalizes_pairs() {
        let g = snapshot(
            &[("C1", Cell), ("C2", Cell), ("S1", Satellite)],
            &[("C1", "S1", 1.0)],
        );
        let demand = ServiceDemand::from_pairs(
            g.table(),
            &[
                ("C2".into(), "C1".into()),
                ("C1".into(), "C2".into()),
            ],
        )
        .unwrap();
        assert_eq!(demand.pair_count(), 1);
        let err = ServiceDemand::from_pairs(g.table(), &[("C1".into(), "C1".into())]);
        assert!(err.is_err());
    }

    #[test]
    fn stale_parent_does_not_corrupt_tie_break() {
        // Regression-style check: multiple equal-delay relaxations into the
        // same node must end with the lexicographically smallest sequence.
        let g = snapshot(
            &[
                ("C1", Cell),
                ("C2", Cell),
                ("S1", Satellite),
                ("S2", Satellite),
                ("S3", Satellite),
                ("S4", Satellite),
            ],
            &[
                ("C1", "S2", 2.0),
                ("C1", "S3", 2.0),
                ("S2", "S4", 2.0),
                ("S3", "S4", 2.0),
                ("S4", "C2", 2.0),
                ("C1", "S1", 3.0),
                ("S1", "S4", 1.0),
            ],
        );
        let t = g.table();
        let p = shortest_path(&g, t.require("C1").unwrap(), t.require("C2").unwrap())
            .unwrap()
            .unwrap();
        let ids: Vec<&str> = p.hops.iter().map(|&h| t.id(h)).collect();
        // Delay 6 paths: C1-S2-S4-C2, C1-S3-S4-C2, C1-S1-S4-C2; all 3 hops.
        assert_eq!(ids, vec!["C1", "S1", "S4", "C2"]);
    }
}
