//! Constellation synthesis, position propagation, and contact generation.
//!
//! Satellites follow circular two-body orbits around a spherical Earth
//! (radius 6371 km, mu = 398600.4418 km^3/s^2). Positions are expressed in
//! the epoch-aligned Cartesian frame: at the epoch it coincides with the
//! Earth-fixed frame, afterwards satellites move inertially while ground
//! cells rotate with the Earth at 360 degrees per sidereal day. Relative
//! distances, and hence contacts, are frame-independent.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contact_plan::{quantize3, Contact, ContactPlan, NodeRecord};
use crate::error::{Error, Result};

/// Mean Earth radius (km).
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Earth gravitational parameter (km^3/s^2).
pub const MU_EARTH: f64 = 398600.4418;
/// Sidereal day (s).
pub const SIDEREAL_DAY_S: f64 = 86164.0905;
/// Speed of light (km/s).
pub const SPEED_OF_LIGHT_KM_S: f64 = 299792.458;

/// A Cartesian position in km.
pub type Position = [f64; 3];

pub fn distance_km(a: Position, b: Position) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

fn normalize_deg(mut d: f64) -> f64 {
    d %= 360.0;
    if d < 0.0 {
        d += 360.0;
    }
    d
}

/// Circular-orbit elements of one satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitalElements {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Longitude of the ascending node, normalized to [0, 360).
    pub raan_deg: f64,
    /// Initial along-track anomaly, normalized to [0, 360).
    pub phase_deg: f64,
    /// Element epoch, seconds relative to the scenario epoch.
    pub epoch_s: f64,
}

impl OrbitalElements {
    pub fn semi_major_axis_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Circular orbital period 2*pi*sqrt(a^3/mu), in seconds.
    pub fn period_s(&self) -> f64 {
        let a = self.semi_major_axis_km();
        2.0 * std::f64::consts::PI * (a * a * a / MU_EARTH).sqrt()
    }
}

/// A ground service area treated as a network endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundCell {
    pub id: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

impl GroundCell {
    pub fn new(id: impl Into<String>, latitude_deg: f64, longitude_deg: f64) -> Self {
        GroundCell {
            id: id.into(),
            latitude_deg,
            longitude_deg,
        }
    }
}

/// One shell of a Walker-style layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub planes: u32,
    pub sats_per_plane: u32,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Along-track phase added per plane index (degrees). 0 keeps all planes
    /// in step.
    #[serde(default)]
    pub phasing_offset_deg: f64,
}

/// Full constellation and contact-generation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstellationConfig {
    pub layers: Vec<LayerConfig>,
    /// ISO-8601 scenario epoch.
    pub epoch: String,
    pub horizon_s: f64,
    pub sample_step_s: f64,
    pub los_threshold_km: f64,
}

impl ConstellationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::config("layers", "at least one layer required"));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if l.planes < 1 {
                return Err(Error::config(format!("layers[{i}].planes"), "must be >= 1"));
            }
            if l.sats_per_plane < 1 {
                return Err(Error::config(
                    format!("layers[{i}].sats_per_plane"),
                    "must be >= 1",
                ));
            }
            if l.altitude_km <= 0.0 {
                return Err(Error::config(
                    format!("layers[{i}].altitude_km"),
                    "must be > 0",
                ));
            }
            if !(0.0..=180.0).contains(&l.inclination_deg) {
                return Err(Error::config(
                    format!("layers[{i}].inclination_deg"),
                    "must be in [0, 180]",
                ));
            }
        }
        if self.horizon_s <= 0.0 {
            return Err(Error::config("horizon_s", "must be > 0"));
        }
        if self.sample_step_s <= 0.0 {
            return Err(Error::config("sample_step_s", "must be > 0"));
        }
        if self.los_threshold_km <= 0.0 {
            return Err(Error::config("los_threshold_km", "must be > 0"));
        }
        Ok(())
    }

    pub fn total_satellites(&self) -> u64 {
        self.layers
            .iter()
            .map(|l| l.planes as u64 * l.sats_per_plane as u64)
            .sum()
    }
}

/// Lay out a Walker-delta constellation: planes evenly spaced in RAAN over
/// 360 degrees, satellites evenly spaced in phase within each plane.
/// Ids are zero-padded global indices ordered by (layer, plane, slot).
pub fn generate_walker(config: &ConstellationConfig) -> Result<Vec<(String, OrbitalElements)>> {
    config.validate()?;
    let total = config.total_satellites();
    let width = (total.max(1) as f64).log10().floor() as usize + 1;
    let width = width.max(4);
    let mut out = Vec::with_capacity(total as usize);
    let mut index = 0u64;
    for layer in &config.layers {
        let raan_step = 360.0 / layer.planes as f64;
        let phase_step = 360.0 / layer.sats_per_plane as f64;
        for plane in 0..layer.planes {
            let raan = normalize_deg(raan_step * plane as f64);
            for slot in 0..layer.sats_per_plane {
                let phase = normalize_deg(
                    phase_step * slot as f64 + layer.phasing_offset_deg * plane as f64,
                );
                out.push((
                    format!("S{index:0width$}"),
                    OrbitalElements {
                        altitude_km: layer.altitude_km,
                        inclination_deg: layer.inclination_deg,
                        raan_deg: raan,
                        phase_deg: phase,
                        epoch_s: 0.0,
                    },
                ));
                index += 1;
            }
        }
    }
    Ok(out)
}

/// Satellite position at time `t` (seconds after the scenario epoch).
pub fn satellite_position(elem: &OrbitalElements, t: f64) -> Position {
    let a = elem.semi_major_axis_km();
    let n = (MU_EARTH / (a * a * a)).sqrt(); // mean motion, rad/s
    let u = elem.phase_deg.to_radians() + n * (t - elem.epoch_s);
    let (sin_u, cos_u) = u.sin_cos();
    let (sin_i, cos_i) = elem.inclination_deg.to_radians().sin_cos();
    let (sin_o, cos_o) = elem.raan_deg.to_radians().sin_cos();
    // In-plane coordinates rotated by inclination, then RAAN.
    let x_p = a * cos_u;
    let y_p = a * sin_u;
    [
        cos_o * x_p - sin_o * cos_i * y_p,
        sin_o * x_p + cos_o * cos_i * y_p,
        sin_i * y_p,
    ]
}

/// Ground-cell position at time `t`: the geodetic point on the spherical
/// Earth, rotated eastwards at one revolution per sidereal day.
pub fn ground_cell_position(cell: &GroundCell, t: f64) -> Position {
    let rot = 360.0 * t / SIDEREAL_DAY_S;
    let lon = (cell.longitude_deg + rot).to_radians();
    let lat = cell.latitude_deg.to_radians();
    let (sin_lat, cos_lat) = lat.sin_cos();
    let (sin_lon, cos_lon) = lon.sin_cos();
    [
        EARTH_RADIUS_KM * cos_lat * cos_lon,
        EARTH_RADIUS_KM * cos_lat * sin_lon,
        EARTH_RADIUS_KM * sin_lat,
    ]
}

/// How per-contact delays are assigned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelayMode {
    /// Propagation at the speed of light over the link distance.
    Physical,
    /// Seed-deterministic draw from uniform(5, 15) ms per contact.
    Uniform,
}

impl std::str::FromStr for DelayMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "physical" => Ok(DelayMode::Physical),
            "uniform" => Ok(DelayMode::Uniform),
            other => Err(Error::config(
                "delay_mode",
                format!("unknown mode '{other}' (expected physical|uniform)"),
            )),
        }
    }
}

/// Delay assignment model. The seed only matters in `Uniform` mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayModel {
    pub mode: DelayMode,
    pub seed: u64,
}

/// Identity of one contact for delay derivation; endpoint order does not
/// matter, so both directions of a link always get the same delay.
#[derive(Debug, Clone, Copy)]
pub struct ContactKey<'a> {
    pub a: &'a str,
    pub b: &'a str,
    pub t_start: f64,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(h: u64, bytes: &[u8]) -> u64 {
    let mut h = h;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl DelayModel {
    pub fn new(mode: DelayMode, seed: u64) -> Self {
        DelayModel { mode, seed }
    }

    /// Delay in ms for a link of the given length. Uniform mode is a pure
    /// function of (seed, contact identity), so regenerating a plan
    /// reproduces it byte for byte.
    pub fn link_delay(&self, distance_km: f64, key: &ContactKey<'_>) -> Result<f64> {
        if distance_km < 0.0 {
            return Err(Error::Argument(format!(
                "distance must be >= 0, got {distance_km}"
            )));
        }
        let raw = match self.mode {
            DelayMode::Physical => distance_km / SPEED_OF_LIGHT_KM_S * 1000.0,
            DelayMode::Uniform => {
                let (lo, hi) = if key.a <= key.b {
                    (key.a, key.b)
                } else {
                    (key.b, key.a)
                };
                let mut h = fnv1a(FNV_OFFSET, &self.seed.to_le_bytes());
                h = fnv1a(h, lo.as_bytes());
                h = fnv1a(h, &[0xff]);
                h = fnv1a(h, hi.as_bytes());
                h = fnv1a(h, &[0xff]);
                h = fnv1a(h, &((key.t_start * 1000.0).round() as i64).to_le_bytes());
                let mut rng = ChaCha8Rng::seed_from_u64(h);
                let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                5.0 + 10.0 * unit
            }
        };
        Ok(quantize3(raw))
    }
}

/// A node whose position can be sampled over time.
enum SceneNode {
    Satellite(OrbitalElements),
    Cell(GroundCell),
}

/// Compute the contact plan for the given satellites and cells by sampling
/// pairwise distances every `sample_step_s` and merging consecutive
/// qualifying samples into closed intervals snapped to sample times.
///
/// Pairs in scope: satellite-satellite and satellite-cell, never cell-cell.
/// A satellite-cell sample additionally requires the satellite above the
/// cell's horizon (elevation > 0). Both directions of each contact are
/// emitted with the same delay.
pub fn compute_contacts(
    satellites: &[(String, OrbitalElements)],
    cells: &[GroundCell],
    config: &ConstellationConfig,
    delay: &DelayModel,
) -> Result<ContactPlan> {
    config.validate()?;
    let mut names: Vec<String> = Vec::new();
    let mut scene: Vec<SceneNode> = Vec::new();
    for (id, elem) in satellites {
        names.push(id.clone());
        scene.push(SceneNode::Satellite(elem.clone()));
    }
    for c in cells {
        names.push(c.id.clone());
        scene.push(SceneNode::Cell(c.clone()));
    }

    // Sample instants: multiples of the step, plus the horizon end when the
    // step does not divide it (documented partial final step).
    let mut times: Vec<f64> = Vec::new();
    let steps = (config.horizon_s / config.sample_step_s).floor() as usize;
    for k in 0..=steps {
        times.push(quantize3(k as f64 * config.sample_step_s));
    }
    if *times.last().unwrap() < config.horizon_s {
        times.push(quantize3(config.horizon_s));
    }

    let positions: Vec<Vec<Position>> = scene
        .par_iter()
        .map(|node| {
            times
                .iter()
                .map(|&t| match node {
                    SceneNode::Satellite(e) => satellite_position(e, t),
                    SceneNode::Cell(c) => ground_cell_position(c, t),
                })
                .collect()
        })
        .collect();

    let n = scene.len();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let in_scope = !matches!(
                (&scene[i], &scene[j]),
                (SceneNode::Cell(_), SceneNode::Cell(_))
            );
            if in_scope {
                pairs.push((i, j));
            }
        }
    }

    let threshold = config.los_threshold_km;
    let contacts: Vec<Contact> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut out = Vec::new();
            let mut run_start: Option<usize> = None;
            for (k, &t) in times.iter().enumerate() {
                let ok = sample_qualifies(&scene[i], &scene[j], positions[i][k], positions[j][k], threshold);
                if ok && run_start.is_none() {
                    run_start = Some(k);
                }
                if (!ok || k == times.len() - 1) && run_start.is_some() {
                    let s = run_start.take().unwrap();
                    let e = if ok { k } else { k - 1 };
                    // A single qualifying sample gives a degenerate [t, t]
                    // interval, which cannot cover any window; skip it.
                    if e > s {
                        let mid = (s + e) / 2;
                        let dist = distance_km(positions[i][mid], positions[j][mid]);
                        let key = ContactKey {
                            a: &names[i],
                            b: &names[j],
                            t_start: times[s],
                        };
                        let d = delay.link_delay(dist, &key).expect("distance >= 0");
                        out.push(Contact::new(times[s], times[e], names[i].clone(), names[j].clone(), d));
                        out.push(Contact::new(times[s], times[e], names[j].clone(), names[i].clone(), d));
                    }
                    let _ = t;
                }
            }
            out
        })
        .flatten()
        .collect();

    let mut nodes: Vec<NodeRecord> = satellites
        .iter()
        .map(|(id, _)| NodeRecord::satellite(id.clone()))
        .collect();
    nodes.extend(
        cells
            .iter()
            .map(|c| NodeRecord::cell(c.id.clone(), c.latitude_deg, c.longitude_deg)),
    );

    ContactPlan::new(
        config.epoch.clone(),
        (0.0, config.horizon_s),
        nodes,
        contacts,
    )
}

fn sample_qualifies(
    a: &SceneNode,
    b: &SceneNode,
    pa: Position,
    pb: Position,
    threshold_km: f64,
) -> bool {
    if distance_km(pa, pb) > threshold_km {
        return false;
    }
    // SGL: the satellite must be above the cell's local horizon, otherwise
    // the raw distance test would admit through-Earth links.
    match (a, b) {
        (SceneNode::Cell(_), SceneNode::Satellite(_)) => above_horizon(pb, pa),
        (SceneNode::Satellite(_), SceneNode::Cell(_)) => above_horizon(pa, pb),
        _ => true,
    }
}

fn above_horizon(sat: Position, cell: Position) -> bool {
    let rel = [sat[0] - cell[0], sat[1] - cell[1], sat[2] - cell[2]];
    rel[0] * cell[0] + rel[1] * cell[1] + rel[2] * cell[2] > 0.0
}
