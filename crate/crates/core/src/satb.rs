//! Service-aware temporal betweenness: per-window counts of service
//! shortest paths traversing each satellite, the ranking permutation, the
//! per-node path index, and critical-node sets.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::routing::{all_service_paths, ServiceDemand, ServicePath, WindowPaths};
use crate::temporal_graph::{NodeTable, SnapshotGraph};

/// SATB time series of one satellite: one non-negative integer per window,
/// bounded by the number of service pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatbVector {
    /// Node index of the satellite.
    pub satellite: usize,
    pub values: Vec<u32>,
}

/// SATB values for all satellites: rows are windows, columns are satellites
/// in id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SatbMatrix {
    /// Node index per column, ascending (== id order).
    pub satellites: Vec<usize>,
    /// `rows[window][column]`.
    pub rows: Vec<Vec<u32>>,
}

impl SatbMatrix {
    pub fn window_count(&self) -> usize {
        self.rows.len()
    }

    pub fn value(&self, window: usize, column: usize) -> u32 {
        self.rows[window][column]
    }

    pub fn column_of(&self, table: &NodeTable, satellite: usize) -> Option<usize> {
        table.satellite_column(satellite)
    }

    /// Satellites with nonzero SATB in the given window.
    pub fn critical_set(&self, window: usize) -> Result<BTreeSet<usize>> {
        let row = self.rows.get(window).ok_or_else(|| {
            Error::Range(format!(
                "window {window} out of range (have {})",
                self.rows.len()
            ))
        })?;
        Ok(row
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(col, _)| self.satellites[col])
            .collect())
    }

    /// CSV export: header row of satellite ids, one row per window.
    pub fn to_csv(&self, table: &NodeTable) -> String {
        let mut s = String::from("window_index");
        for &sat in &self.satellites {
            s.push(',');
            s.push_str(table.id(sat));
        }
        s.push('\n');
        for (w, row) in self.rows.iter().enumerate() {
            s.push_str(&w.to_string());
            for v in row {
                s.push(',');
                s.push_str(&v.to_string());
            }
            s.push('\n');
        }
        s
    }
}

/// Per-window descending-SATB orderings. Each row is a permutation of all
/// satellite node indices; ties break by ascending satellite id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankingMatrix {
    pub rows: Vec<Vec<usize>>,
}

impl RankingMatrix {
    /// Top-k satellites of a window (node indices).
    pub fn top_k(&self, window: usize, k: usize) -> Result<Vec<usize>> {
        let row = self.rows.get(window).ok_or_else(|| {
            Error::Range(format!(
                "window {window} out of range (have {})",
                self.rows.len()
            ))
        })?;
        Ok(row.iter().take(k).copied().collect())
    }

    pub fn to_csv(&self, table: &NodeTable) -> String {
        let width = self.rows.first().map(|r| r.len()).unwrap_or(0);
        let mut s = String::from("window_index");
        for i in 1..=width {
            s.push_str(&format!(",rank{i}"));
        }
        s.push('\n');
        for (w, row) in self.rows.iter().enumerate() {
            s.push_str(&w.to_string());
            for &sat in row {
                s.push(',');
                s.push_str(table.id(sat));
            }
            s.push('\n');
        }
        s
    }
}

/// For each (satellite, window), the service pairs whose shortest path
/// traverses that satellite. Paths are stored by reference into the
/// window's path map (pair index), so the list length equals the SATB
/// value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PathIndex {
    map: BTreeMap<(usize, usize), Vec<usize>>,
}

impl PathIndex {
    pub fn pairs_for(&self, satellite: usize, window: usize) -> &[usize] {
        self.map
            .get(&(satellite, window))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn insert(&mut self, satellite: usize, window: usize, pair: usize) {
        let list = self.map.entry((satellite, window)).or_default();
        match list.binary_search(&pair) {
            Ok(_) => {}
            Err(pos) => list.insert(pos, pair),
        }
    }

    pub fn remove(&mut self, satellite: usize, window: usize, pair: usize) {
        if let Some(list) = self.map.get_mut(&(satellite, window)) {
            if let Ok(pos) = list.binary_search(&pair) {
                list.remove(pos);
            }
            if list.is_empty() {
                self.map.remove(&(satellite, window));
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<usize>)> {
        self.map.iter()
    }

    /// JSON export resolving node indices to ids and pair indices to paths.
    pub fn to_json(&self, table: &NodeTable, window_paths: &[WindowPaths]) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .map
            .iter()
            .map(|(&(sat, window), pairs)| {
                let paths: Vec<serde_json::Value> = pairs
                    .iter()
                    .filter_map(|&p| window_paths[window].paths[p].as_ref())
                    .map(|path| path_json(table, path))
                    .collect();
                serde_json::json!({
                    "satellite": table.id(sat),
                    "window_index": window,
                    "paths": paths,
                })
            })
            .collect();
        serde_json::Value::Array(entries)
    }
}

fn path_json(table: &NodeTable, path: &ServicePath) -> serde_json::Value {
    serde_json::json!({
        "src": table.id(path.src),
        "dst": table.id(path.dst),
        "delay_ms": path.delay_ms,
        "hops": path.hops.iter().map(|&h| table.id(h)).collect::<Vec<_>>(),
    })
}

/// Everything the per-window analysis produces: the SATB matrix, the
/// ranking permutation, the path index, and the raw per-window paths.
#[derive(Debug, Clone)]
pub struct Baseline {
    pub matrix: SatbMatrix,
    pub ranking: RankingMatrix,
    pub path_index: PathIndex,
    pub window_paths: Vec<WindowPaths>,
}

/// SATB vector of a single satellite, computed window by window from the
/// service shortest paths.
pub fn satb_single(
    graphs: &[SnapshotGraph],
    demand: &ServiceDemand,
    satellite: usize,
) -> Result<SatbVector> {
    let table = graphs
        .first()
        .ok_or_else(|| Error::Argument("no snapshot graphs".into()))?
        .table();
    if table.satellite_column(satellite).is_none() {
        return Err(Error::Argument(format!(
            "node {} is not a satellite",
            satellite
        )));
    }
    let mut values = Vec::with_capacity(graphs.len());
    for g in graphs {
        let mut beta = 0u32;
        for &(a, b) in demand.pairs() {
            if let Some(path) = crate::routing::shortest_path(g, a, b)? {
                if path.contains(satellite) {
                    beta += 1;
                }
            }
        }
        values.push(beta);
    }
    Ok(SatbVector { satellite, values })
}

/// SATB for all satellites in one pass per window: route every pair once
/// and count interior occurrences.
pub fn satb_all(graphs: &[SnapshotGraph], demand: &ServiceDemand) -> Result<SatbMatrix> {
    Ok(rank_critical(graphs, demand)?.matrix)
}

/// Full analysis: SATB matrix, descending ranking with id tie-break, and
/// the per-(satellite, window) path index.
pub fn rank_critical(graphs: &[SnapshotGraph], demand: &ServiceDemand) -> Result<Baseline> {
    let table = graphs
        .first()
        .ok_or_else(|| Error::Argument("no snapshot graphs".into()))?
        .table();
    let satellites: Vec<usize> = table.satellites().to_vec();

    let window_paths: Vec<WindowPaths> = graphs
        .par_iter()
        .map(|g| all_service_paths(g, demand))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(graphs.len());
    let mut path_index = PathIndex::default();
    for wp in &window_paths {
        let mut row = vec![0u32; satellites.len()];
        for (pair_idx, path) in wp.paths.iter().enumerate() {
            let Some(path) = path else { continue };
            for &node in path.interior() {
                let col = table
                    .satellite_column(node)
                    .expect("interior nodes are satellites");
                row[col] += 1;
                path_index.insert(node, wp.window, pair_idx);
            }
        }
        rows.push(row);
    }

    let matrix = SatbMatrix { satellites, rows };
    let ranking = rank_matrix(&matrix);
    Ok(Baseline {
        matrix,
        ranking,
        path_index,
        window_paths,
    })
}

/// Descending sort permutation of each row; ties by ascending satellite id
/// (== ascending node index).
pub fn rank_matrix(matrix: &SatbMatrix) -> RankingMatrix {
    let rows = matrix
        .rows
        .iter()
        .map(|row| {
            let mut order: Vec<usize> = (0..matrix.satellites.len()).collect();
            order.sort_by(|&a, &b| row[b].cmp(&row[a]).then_with(|| a.cmp(&b)));
            order.into_iter().map(|col| matrix.satellites[col]).collect()
        })
        .collect();
    RankingMatrix { rows }
}

/// Critical set of a window: satellites with SATB > 0.
pub fn critical_set(matrix: &SatbMatrix, window: usize) -> Result<BTreeSet<usize>> {
    matrix.critical_set(window)
}
