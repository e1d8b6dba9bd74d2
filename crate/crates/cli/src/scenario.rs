//! Scenario configuration: the TOML schema binding constellation, demand,
//! and failure-event knobs into one reproducible run description.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use conres_core::contact_plan::{parse_contact_plan, NodeKind, PlanFormat};
use conres_core::error::{Error, Result};
use conres_core::failure::{geo_cluster_failure, FailureEvent, GeoClusterSpec};
use conres_core::orbital::{
    compute_contacts, generate_walker, ConstellationConfig, DelayMode, DelayModel, GroundCell,
    LayerConfig, OrbitalElements,
};
use conres_core::routing::ServiceDemand;
use conres_core::satb::Baseline;
use conres_core::temporal_graph::{
    collect_boundaries, discretize, merge_windows, NodeTable, SnapshotGraph, TimeWindow,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSpec {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandSpec {
    /// Cells taking part in services; defaults to every declared cell.
    #[serde(default)]
    pub active_cells: Option<Vec<String>>,
    /// Service between every active pair.
    #[serde(default)]
    pub full_mesh: Option<bool>,
    /// Explicit unordered service pairs.
    #[serde(default)]
    pub pairs: Option<Vec<(String, String)>>,
}

/// Geo descriptor as written in scenario/event files; the seed defaults to
/// the scenario seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeoSpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<String>>,
    pub count: usize,
    pub radius_km: f64,
    pub altitude_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// One failure event descriptor.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EventSpec {
    Explicit { t_f: f64, ids: Vec<String> },
    TopK { t_f: f64, top_k: usize },
    GeoCluster { t_f: f64, geo: GeoSpecFile },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub epoch: String,
    /// Service duration threshold for window merging (s).
    #[serde(default = "default_threshold")]
    pub threshold_s: f64,
    #[serde(default = "default_delay_mode")]
    pub delay_mode: String,
    #[serde(default)]
    pub seed: u64,

    /// Path to an externally produced contact plan (csv or json).
    #[serde(default)]
    pub contact_plan: Option<PathBuf>,

    /// Constellation synthesis knobs; exactly one of `contact_plan` and
    /// `layers` must be given.
    #[serde(default)]
    pub layers: Option<Vec<LayerConfig>>,
    #[serde(default)]
    pub horizon_s: Option<f64>,
    #[serde(default = "default_sample_step")]
    pub sample_step_s: f64,
    #[serde(default = "default_los_threshold")]
    pub los_threshold_km: f64,

    #[serde(default)]
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub demand: Option<DemandSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

fn default_threshold() -> f64 {
    60.0
}
fn default_delay_mode() -> String {
    "uniform".into()
}
fn default_sample_step() -> f64 {
    10.0
}
fn default_los_threshold() -> f64 {
    2500.0
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<ScenarioConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ScenarioConfig = toml::from_str(&text)
            .map_err(|e| Error::config("scenario", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.contact_plan, &self.layers) {
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "contact_plan/layers",
                    "give exactly one of a contact-plan path or constellation layers",
                ))
            }
            (None, None) => {
                return Err(Error::config(
                    "contact_plan/layers",
                    "one of contact_plan or layers is required",
                ))
            }
            _ => {}
        }
        if self.layers.is_some() && self.horizon_s.is_none() {
            return Err(Error::config("horizon_s", "required with layers"));
        }
        if self.threshold_s <= 0.0 {
            return Err(Error::config("threshold_s", "must be > 0"));
        }
        self.delay_mode.parse::<DelayMode>()?;
        if let Some(d) = &self.demand {
            let full = d.full_mesh.unwrap_or(false);
            let explicit = d.pairs.as_ref().map(|p| !p.is_empty()).unwrap_or(false);
            if full && explicit {
                return Err(Error::config(
                    "demand",
                    "full_mesh and explicit pairs are mutually exclusive",
                ));
            }
        }
        let declared: BTreeSet<&str> = self.cells.iter().map(|c| c.id.as_str()).collect();
        if self.layers.is_some() {
            if let Some(d) = &self.demand {
                for id in d.active_cells.iter().flatten() {
                    if !declared.contains(id.as_str()) {
                        return Err(Error::config(
                            "demand.active_cells",
                            format!("cell '{id}' is not declared"),
                        ));
                    }
                }
                for (a, b) in d.pairs.iter().flatten() {
                    for id in [a, b] {
                        if !declared.contains(id.as_str()) {
                            return Err(Error::config(
                                "demand.pairs",
                                format!("cell '{id}' is not declared"),
                            ));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn constellation_config(&self) -> Result<ConstellationConfig> {
        let layers = self
            .layers
            .clone()
            .ok_or_else(|| Error::config("layers", "scenario has no constellation layers"))?;
        Ok(ConstellationConfig {
            layers,
            epoch: self.epoch.clone(),
            horizon_s: self.horizon_s.unwrap_or_default(),
            sample_step_s: self.sample_step_s,
            los_threshold_km: self.los_threshold_km,
        })
    }

    pub fn delay_model(&self, mode_override: Option<DelayMode>, seed: u64) -> Result<DelayModel> {
        let mode = match mode_override {
            Some(m) => m,
            None => self.delay_mode.parse()?,
        };
        Ok(DelayModel::new(mode, seed))
    }

    pub fn ground_cells(&self) -> Vec<GroundCell> {
        self.cells
            .iter()
            .map(|c| GroundCell::new(c.id.clone(), c.lat, c.lon))
            .collect()
    }
}

/// A scenario resolved into concrete model objects.
pub struct ResolvedScenario {
    pub plan: conres_core::ContactPlan,
    pub windows: Vec<TimeWindow>,
    pub graphs: Vec<SnapshotGraph>,
    pub demand: ServiceDemand,
    /// Present only for generated constellations (needed by geo events).
    pub satellites: Option<Vec<(String, OrbitalElements)>>,
    pub cells: Vec<GroundCell>,
}

impl ResolvedScenario {
    pub fn table(&self) -> &Arc<NodeTable> {
        self.graphs[0].table()
    }
}

/// Effective knobs after CLI overrides.
pub struct Overrides {
    pub seed: Option<u64>,
    pub threshold_s: Option<f64>,
    pub delay_mode: Option<DelayMode>,
}

pub fn resolve(
    cfg: &ScenarioConfig,
    base_dir: &Path,
    ov: &Overrides,
) -> Result<ResolvedScenario> {
    let seed = ov.seed.unwrap_or(cfg.seed);
    let threshold = ov.threshold_s.unwrap_or(cfg.threshold_s);

    let (plan, satellites, cells) = if let Some(rel) = &cfg.contact_plan {
        let path = if rel.is_absolute() {
            rel.clone()
        } else {
            base_dir.join(rel)
        };
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let format = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => PlanFormat::Json,
            _ => PlanFormat::Csv,
        };
        let plan = parse_contact_plan(&bytes, format)?;
        // Cells with coordinates come from the plan's node records.
        let cells: Vec<GroundCell> = plan
            .nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Cell)
            .filter_map(|n| match (n.lat, n.lon) {
                (Some(lat), Some(lon)) => Some(GroundCell::new(n.id.clone(), lat, lon)),
                _ => None,
            })
            .collect();
        (plan, None, cells)
    } else {
        let ccfg = cfg.constellation_config()?;
        let sats = generate_walker(&ccfg)?;
        let cells = cfg.ground_cells();
        let delay = cfg.delay_model(ov.delay_mode, seed)?;
        let plan = compute_contacts(&sats, &cells, &ccfg, &delay)?;
        (plan, Some(sats), cells)
    };

    let windows = merge_windows(&collect_boundaries(&plan), threshold)?;
    let graphs = discretize(&plan, &windows)?;
    let table = graphs[0].table();

    let all_cell_ids: Vec<String> = plan
        .nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Cell)
        .map(|n| n.id.clone())
        .collect();
    let demand = match &cfg.demand {
        None => ServiceDemand::full_mesh(table, &all_cell_ids)?,
        Some(d) => {
            if let Some(pairs) = d.pairs.as_ref().filter(|p| !p.is_empty()) {
                ServiceDemand::from_pairs(table, pairs)?
            } else {
                let active = d.active_cells.clone().unwrap_or(all_cell_ids);
                ServiceDemand::full_mesh(table, &active)?
            }
        }
    };

    Ok(ResolvedScenario {
        plan,
        windows,
        graphs,
        demand,
        satellites,
        cells,
    })
}

/// Resolve an event descriptor into a concrete failure event.
pub fn resolve_event(
    spec: &EventSpec,
    scenario_seed: u64,
    resolved: &ResolvedScenario,
    baseline: &Baseline,
) -> Result<FailureEvent> {
    match spec {
        EventSpec::Explicit { t_f, ids } => FailureEvent::explicit(resolved.table(), *t_f, ids),
        EventSpec::TopK { t_f, top_k } => {
            FailureEvent::top_k(baseline, &resolved.windows, *t_f, *top_k)
        }
        EventSpec::GeoCluster { t_f, geo } => {
            let sats = resolved.satellites.as_ref().ok_or_else(|| {
                Error::Argument(
                    "geo-cluster events need constellation geometry; this scenario \
                     uses an external contact plan"
                        .into(),
                )
            })?;
            let spec = GeoClusterSpec {
                cells: geo.cells.clone(),
                count: geo.count,
                radius_km: geo.radius_km,
                altitude_km: geo.altitude_km,
                seed: geo.seed.unwrap_or(scenario_seed),
            };
            geo_cluster_failure(sats, &resolved.cells, resolved.table(), *t_f, &spec)
        }
    }
}

/// Load a standalone events file (JSON list of descriptors).
pub fn load_events(path: &Path) -> Result<Vec<EventSpec>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Schema(format!("events file: {e}")))
}
