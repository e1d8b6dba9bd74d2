//! Artifact emission: every run writes byte-stable files plus a manifest
//! of their SHA-256 hashes, so identical inputs are checkable by diffing
//! manifests alone.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use conres_core::error::{Error, Result};
use conres_core::failure::ImpactReport;
use conres_core::routing::{ServiceDemand, WindowPaths};
use conres_core::temporal_graph::{NodeTable, TimeWindow};

pub struct ArtifactWriter {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<ArtifactWriter> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        self.hashes
            .insert(name.to_string(), hex::encode(Sha256::digest(body.as_bytes())));
        Ok(path)
    }

    /// Write `manifest.json` listing every artifact hash.
    pub fn finish(self) -> Result<PathBuf> {
        let manifest = serde_json::json!({ "files": self.hashes });
        let path = self.dir.join("manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        body.push('\n');
        std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

pub fn windows_csv(windows: &[TimeWindow]) -> String {
    let mut s = String::from("window_index,t_start,t_end\n");
    for w in windows {
        s.push_str(&format!("{},{:.3},{:.3}\n", w.index, w.t_start, w.t_end));
    }
    s
}

pub fn paths_json(
    table: &NodeTable,
    demand: &ServiceDemand,
    window_paths: &[WindowPaths],
    windows: &[TimeWindow],
) -> String {
    let body: Vec<serde_json::Value> = windows
        .iter()
        .map(|w| {
            let pairs: Vec<serde_json::Value> = demand
                .pairs()
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| match &window_paths[w.index].paths[i] {
                    Some(p) => serde_json::json!({
                        "src": table.id(a),
                        "dst": table.id(b),
                        "routed": true,
                        "delay_ms": p.delay_ms,
                        "hops": p.hops.iter().map(|&h| table.id(h)).collect::<Vec<_>>(),
                    }),
                    None => serde_json::json!({
                        "src": table.id(a),
                        "dst": table.id(b),
                        "routed": false,
                    }),
                })
                .collect();
            serde_json::json!({
                "window_index": w.index,
                "t_start": w.t_start,
                "t_end": w.t_end,
                "pairs": pairs,
            })
        })
        .collect();
    pretty(&serde_json::Value::Array(body))
}

pub fn impact_json(table: &NodeTable, demand: &ServiceDemand, report: &ImpactReport) -> String {
    let failed: Vec<&str> = report.event.failed.iter().map(|&n| table.id(n)).collect();
    let affected_nodes: Vec<&str> = report.affected_nodes.iter().map(|&n| table.id(n)).collect();
    let affected_paths: Vec<serde_json::Value> = report
        .affected_paths
        .iter()
        .map(|(&(w, pair), &(pre, post))| {
            let (a, b) = demand.pairs()[pair];
            serde_json::json!({
                "window_index": w,
                "src": table.id(a),
                "dst": table.id(b),
                "pre_delay_ms": pre,
                "post_delay_ms": if post.is_finite() {
                    serde_json::json!(post)
                } else {
                    serde_json::Value::Null
                },
            })
        })
        .collect();
    let body = serde_json::json!({
        "event": {
            "t_f": report.event.t_f,
            "window_f": report.window_f,
            "kind": report.event.kind,
            "failed": failed,
        },
        "affected_nodes": affected_nodes,
        "affected_paths": affected_paths,
    });
    pretty(&body)
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json serializes");
    s.push('\n');
    s
}
