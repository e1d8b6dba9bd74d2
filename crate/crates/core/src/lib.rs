//! Temporal-graph resilience analysis for LEO mega-constellations.
//!
//! The pipeline: synthesize a Walker constellation (or ingest an external
//! contact plan), discretize the contact plan into per-window snapshot
//! graphs, route designated cell-pair services, score every satellite's
//! per-window importance by the number of service shortest paths it
//! carries, and evaluate how satellite failures degrade and recover
//! connectivity and delay over time.

pub mod contact_plan;
pub mod error;
pub mod failure;
pub mod orbital;
pub mod report;
pub mod routing;
pub mod satb;
pub mod temporal_graph;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use contact_plan::{Contact, ContactPlan, NodeKind, NodeRecord, PlanFormat};
pub use error::{Error, Result};
pub use failure::{
    evaluate_failure, evaluate_with_rerouting, geo_cluster_failure, FailureEvent, FailureKind,
    GeoClusterSpec, ImpactReport, RoutingView,
};
pub use orbital::{
    compute_contacts, generate_walker, ground_cell_position, satellite_position,
    ConstellationConfig, DelayMode, DelayModel, GroundCell, LayerConfig, OrbitalElements,
};
pub use report::{
    critical_count_series, eta_series, impact_series, mean_delay_series, MetricSeries,
    ReportFormat, Unit,
};
pub use routing::{
    all_service_paths, connectivity_ratio, path_delay, shortest_path, ServiceDemand, ServicePath,
    WindowPaths,
};
pub use satb::{
    critical_set, rank_critical, satb_all, satb_single, Baseline, PathIndex, RankingMatrix,
    SatbMatrix, SatbVector,
};
pub use temporal_graph::{
    collect_boundaries, discretize, merge_windows, remove_nodes, NodeTable, SnapshotGraph,
    TimeWindow,
};
