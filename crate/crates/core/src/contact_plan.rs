//! Canonical contact-plan data model, file ingestion, and validation.
//!
//! A contact plan is the time-ordered list of communication opportunities
//! between nodes (satellites and ground cells). Both synthetically generated
//! plans and externally produced ones enter the system through this module.
//!
//! Two on-disk formats are supported: a sectioned CSV and a JSON mirror.
//! The canonical emitters are byte-stable: LF line endings, fixed field
//! order, times and delays printed with 3 decimal places.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Round to 3 decimal places (millisecond/metre-level resolution). All times
/// and delays in a canonical plan carry at most 3 decimals so the CSV
/// round-trip is exact.
pub fn quantize3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Node classification. Ground cells never link to each other directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Satellite,
    Cell,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeKind::Satellite => write!(f, "satellite"),
            NodeKind::Cell => write!(f, "cell"),
        }
    }
}

impl std::str::FromStr for NodeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "satellite" => Ok(NodeKind::Satellite),
            "cell" => Ok(NodeKind::Cell),
            other => Err(Error::Schema(format!("unknown node kind '{other}'"))),
        }
    }
}

/// A node declaration. Cells usually carry a geodetic position; satellites
/// do not (their geometry lives with the orbital elements, not the plan).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: String,
    pub kind: NodeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

impl NodeRecord {
    pub fn satellite(id: impl Into<String>) -> Self {
        NodeRecord {
            id: id.into(),
            kind: NodeKind::Satellite,
            lat: None,
            lon: None,
        }
    }

    pub fn cell(id: impl Into<String>, lat: f64, lon: f64) -> Self {
        NodeRecord {
            id: id.into(),
            kind: NodeKind::Cell,
            lat: Some(lat),
            lon: Some(lon),
        }
    }
}

/// One timed communication opportunity from `from` to `to`.
/// Times are seconds relative to the plan epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub t_start: f64,
    pub t_end: f64,
    pub from: String,
    pub to: String,
    pub delay_ms: f64,
}

impl Contact {
    pub fn new(
        t_start: f64,
        t_end: f64,
        from: impl Into<String>,
        to: impl Into<String>,
        delay_ms: f64,
    ) -> Self {
        Contact {
            t_start,
            t_end,
            from: from.into(),
            to: to.into(),
            delay_ms,
        }
    }

    fn cmp_canonical(&self, other: &Self) -> std::cmp::Ordering {
        self.t_start
            .total_cmp(&other.t_start)
            .then_with(|| self.from.cmp(&other.from))
            .then_with(|| self.to.cmp(&other.to))
    }
}

/// A validated, canonically ordered contact plan.
///
/// Canonical form: nodes sorted by id, contacts sorted by
/// `(t_start, from, to)`, duplicates collapsed, all times and delays
/// quantized to 3 decimals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactPlan {
    /// Plan epoch as an ISO-8601 timestamp; all times are seconds after it.
    pub epoch: String,
    /// `[t0, T]` in seconds relative to the epoch.
    pub horizon: (f64, f64),
    pub nodes: Vec<NodeRecord>,
    pub contacts: Vec<Contact>,
}

/// A single invariant breach found by [`validate`]. Violations are data,
/// not failures: a plan built by hand can be inspected before use.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Stable rule identifier, e.g. `unknown-endpoint`.
    pub rule: &'static str,
    /// The offending contact or node, rendered for diagnostics.
    pub subject: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.rule, self.subject)
    }
}

impl ContactPlan {
    /// Build a plan and bring it to canonical form. Fails if any invariant
    /// is violated.
    pub fn new(
        epoch: impl Into<String>,
        horizon: (f64, f64),
        nodes: Vec<NodeRecord>,
        contacts: Vec<Contact>,
    ) -> Result<Self> {
        let mut plan = ContactPlan {
            epoch: epoch.into(),
            horizon,
            nodes,
            contacts,
        };
        plan.canonicalize();
        plan.check_valid()?;
        Ok(plan)
    }

    /// Sort nodes by id and contacts by `(t_start, from, to)`, quantize all
    /// times/delays to 3 decimals, and collapse duplicate identical contacts.
    pub fn canonicalize(&mut self) {
        self.horizon.0 = quantize3(self.horizon.0);
        self.horizon.1 = quantize3(self.horizon.1);
        self.nodes.sort_by(|a, b| a.id.cmp(&b.id));
        for c in &mut self.contacts {
            c.t_start = quantize3(c.t_start);
            c.t_end = quantize3(c.t_end);
            c.delay_ms = quantize3(c.delay_ms);
        }
        self.contacts.sort_by(|a, b| {
            a.cmp_canonical(b)
                .then_with(|| a.t_end.total_cmp(&b.t_end))
                .then_with(|| a.delay_ms.total_cmp(&b.delay_ms))
        });
        self.contacts.dedup_by(|a, b| a == b);
    }

    fn check_valid(&self) -> Result<()> {
        let violations = validate(self);
        if let Some(v) = violations.first() {
            return Err(Error::Validation(format!(
                "{v} ({} violation(s) total)",
                violations.len()
            )));
        }
        Ok(())
    }

    pub fn node(&self, id: &str) -> Option<&NodeRecord> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// Mirror every contact so each appears in both directions. Idempotent
    /// on already-symmetric plans (the duplicate pass collapses repeats).
    pub fn mirror_contacts(&mut self) {
        let mut mirrored: Vec<Contact> = self
            .contacts
            .iter()
            .map(|c| Contact::new(c.t_start, c.t_end, c.to.clone(), c.from.clone(), c.delay_ms))
            .collect();
        self.contacts.append(&mut mirrored);
        self.canonicalize();
    }
}

/// Check every type invariant and return the full list of breaches.
/// Empty output means the plan is well-formed.
pub fn validate(plan: &ContactPlan) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut kinds: BTreeMap<&str, NodeKind> = BTreeMap::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();

    if plan.horizon.0 >= plan.horizon.1 {
        out.push(Violation {
            rule: "empty-horizon",
            subject: format!("horizon [{}, {}]", plan.horizon.0, plan.horizon.1),
        });
    }

    for n in &plan.nodes {
        if !seen.insert(&n.id) {
            out.push(Violation {
                rule: "duplicate-node",
                subject: n.id.clone(),
            });
        }
        kinds.insert(&n.id, n.kind);
        if let Some(lat) = n.lat {
            if !(-90.0..=90.0).contains(&lat) {
                out.push(Violation {
                    rule: "invalid-latitude",
                    subject: format!("node {} lat {}", n.id, lat),
                });
            }
        }
    }

    let mut prev: Option<&Contact> = None;
    for c in &plan.contacts {
        let subject = format!("contact [{}, {}] {} -> {}", c.t_start, c.t_end, c.from, c.to);
        if c.t_start >= c.t_end {
            out.push(Violation {
                rule: "nonpositive-duration",
                subject: subject.clone(),
            });
        }
        if c.from == c.to {
            out.push(Violation {
                rule: "self-loop",
                subject: subject.clone(),
            });
        }
        if c.delay_ms <= 0.0 {
            out.push(Violation {
                rule: "nonpositive-delay",
                subject: subject.clone(),
            });
        }
        if c.t_start < plan.horizon.0 || c.t_end > plan.horizon.1 {
            out.push(Violation {
                rule: "outside-horizon",
                subject: subject.clone(),
            });
        }
        match (kinds.get(c.from.as_str()), kinds.get(c.to.as_str())) {
            (Some(NodeKind::Cell), Some(NodeKind::Cell)) => out.push(Violation {
                rule: "cell-to-cell-link",
                subject: subject.clone(),
            }),
            (Some(_), Some(_)) => {}
            _ => out.push(Violation {
                rule: "unknown-endpoint",
                subject: subject.clone(),
            }),
        }
        if let Some(p) = prev {
            if p.cmp_canonical(c) == std::cmp::Ordering::Greater {
                out.push(Violation {
                    rule: "unsorted-contacts",
                    subject: subject.clone(),
                });
            }
        }
        prev = Some(c);
    }
    out
}

/// Declared input format for [`parse_contact_plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanFormat {
    Csv,
    Json,
}

impl std::str::FromStr for PlanFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(PlanFormat::Csv),
            "json" => Ok(PlanFormat::Json),
            other => Err(Error::config("format", format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonPlan {
    epoch: String,
    horizon: (f64, f64),
    #[serde(default)]
    symmetric: bool,
    nodes: Vec<NodeRecord>,
    contacts: Vec<Contact>,
}

/// Parse a contact plan from bytes in the declared format, returning the
/// validated canonical form. A `symmetric` header flag mirrors every contact
/// so files may list each opportunity once.
pub fn parse_contact_plan(source: &[u8], format: PlanFormat) -> Result<ContactPlan> {
    let text = std::str::from_utf8(source)
        .map_err(|e| Error::Schema(format!("input is not valid UTF-8: {e}")))?;
    let (mut plan, symmetric) = match format {
        PlanFormat::Csv => parse_csv(text)?,
        PlanFormat::Json => {
            let jp: JsonPlan = serde_json::from_str(text)
                .map_err(|e| Error::Parse { line: e.line(), reason: e.to_string() })?;
            (
                ContactPlan {
                    epoch: jp.epoch,
                    horizon: jp.horizon,
                    nodes: jp.nodes,
                    contacts: jp.contacts,
                },
                jp.symmetric,
            )
        }
    };
    validate_epoch(&plan.epoch)?;
    if symmetric {
        plan.mirror_contacts();
    } else {
        plan.canonicalize();
    }
    plan.check_valid()?;
    Ok(plan)
}

fn validate_epoch(epoch: &str) -> Result<()> {
    let ok = chrono::DateTime::parse_from_rfc3339(epoch).is_ok()
        || chrono::NaiveDateTime::parse_from_str(epoch, "%Y-%m-%d %H:%M:%S").is_ok()
        || chrono::NaiveDateTime::parse_from_str(epoch, "%Y-%m-%dT%H:%M:%S").is_ok();
    if ok {
        Ok(())
    } else {
        Err(Error::Schema(format!("epoch '{epoch}' is not an ISO-8601 timestamp")))
    }
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        reason: format!("invalid {what} '{s}'"),
    })
}

fn parse_csv(text: &str) -> Result<(ContactPlan, bool)> {
    #[derive(PartialEq)]
    enum Section {
        Header,
        Nodes,
        Contacts,
    }
    let mut section = Section::Header;
    let mut epoch: Option<String> = None;
    let mut horizon: Option<(f64, f64)> = None;
    let mut symmetric = false;
    let mut nodes = Vec::new();
    let mut contacts = Vec::new();
    let mut expect_column_header = false;

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        match line.trim() {
            "[nodes]" => {
                section = Section::Nodes;
                expect_column_header = true;
                continue;
            }
            "[contacts]" => {
                section = Section::Contacts;
                expect_column_header = true;
                continue;
            }
            _ => {}
        }
        if expect_column_header {
            // The column header row after a section marker is fixed; check it
            // so a missing marker surfaces as a clear error.
            let want = match section {
                Section::Nodes => "id,kind,lat,lon",
                Section::Contacts => "t_start,t_end,from,to,delay_ms",
                Section::Header => unreachable!(),
            };
            if line.trim() != want {
                return Err(Error::Parse {
                    line: lineno,
                    reason: format!("expected column header '{want}', got '{line}'"),
                });
            }
            expect_column_header = false;
            continue;
        }
        match section {
            Section::Header => {
                let (key, value) = line.split_once(',').ok_or_else(|| Error::Parse {
                    line: lineno,
                    reason: format!("expected 'key,value' header line, got '{line}'"),
                })?;
                match key.trim() {
                    "epoch" => epoch = Some(value.trim().to_string()),
                    "horizon" => {
                        let (a, b) = value.split_once(',').ok_or_else(|| Error::Parse {
                            line: lineno,
                            reason: "horizon needs two values".into(),
                        })?;
                        horizon = Some((
                            parse_f64(a, lineno, "horizon start")?,
                            parse_f64(b, lineno, "horizon end")?,
                        ));
                    }
                    "symmetric" => {
                        symmetric = match value.trim() {
                            "true" => true,
                            "false" => false,
                            other => {
                                return Err(Error::Parse {
                                    line: lineno,
                                    reason: format!("symmetric must be true/false, got '{other}'"),
                                })
                            }
                        };
                    }
                    other => {
                        return Err(Error::Parse {
                            line: lineno,
                            reason: format!("unknown header key '{other}'"),
                        })
                    }
                }
            }
            Section::Nodes => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 4 {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("node row needs 4 fields, got {}", fields.len()),
                    });
                }
                let kind: NodeKind = fields[1].trim().parse()?;
                let lat = if fields[2].trim().is_empty() {
                    None
                } else {
                    Some(parse_f64(fields[2], lineno, "latitude")?)
                };
                let lon = if fields[3].trim().is_empty() {
                    None
                } else {
                    Some(parse_f64(fields[3], lineno, "longitude")?)
                };
                nodes.push(NodeRecord {
                    id: fields[0].trim().to_string(),
                    kind,
                    lat,
                    lon,
                });
            }
            Section::Contacts => {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != 5 {
                    return Err(Error::Parse {
                        line: lineno,
                        reason: format!("contact row needs 5 fields, got {}", fields.len()),
                    });
                }
                contacts.push(Contact {
                    t_start: parse_f64(fields[0], lineno, "t_start")?,
                    t_end: parse_f64(fields[1], lineno, "t_end")?,
                    from: fields[2].trim().to_string(),
                    to: fields[3].trim().to_string(),
                    delay_ms: parse_f64(fields[4], lineno, "delay_ms")?,
                });
            }
        }
    }

    let epoch = epoch.ok_or_else(|| Error::Schema("missing 'epoch' header".into()))?;
    let horizon = horizon.ok_or_else(|| Error::Schema("missing 'horizon' header".into()))?;
    Ok((
        ContactPlan {
            epoch,
            horizon,
            nodes,
            contacts,
        },
        symmetric,
    ))
}

/// Canonical CSV emitter. Output is byte-stable for a given plan.
pub fn to_csv_string(plan: &ContactPlan) -> String {
    let mut s = String::new();
    s.push_str(&format!("epoch,{}\n", plan.epoch));
    s.push_str(&format!(
        "horizon,{:.3},{:.3}\n",
        plan.horizon.0, plan.horizon.1
    ));
    s.push_str("symmetric,false\n");
    s.push_str("[nodes]\nid,kind,lat,lon\n");
    for n in &plan.nodes {
        let lat = n.lat.map(|v| format!("{v:.6}")).unwrap_or_default();
        let lon = n.lon.map(|v| format!("{v:.6}")).unwrap_or_default();
        s.push_str(&format!("{},{},{},{}\n", n.id, n.kind, lat, lon));
    }
    s.push_str("[contacts]\nt_start,t_end,from,to,delay_ms\n");
    for c in &plan.contacts {
        s.push_str(&format!(
            "{:.3},{:.3},{},{},{:.3}\n",
            c.t_start, c.t_end, c.from, c.to, c.delay_ms
        ));
    }
    s
}

/// Canonical JSON emitter (pretty-printed, trailing newline).
pub fn to_json_string(plan: &ContactPlan) -> String {
    let jp = JsonPlan {
        epoch: plan.epoch.clone(),
        horizon: plan.horizon,
        symmetric: false,
        nodes: plan.nodes.clone(),
        contacts: plan.contacts.clone(),
    };
    let mut s = serde_json::to_string_pretty(&jp).expect("plan serialization cannot fail");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPOCH: &str = "2024-10-09T04:00:00Z";

    fn two_node_plan(contacts: Vec<Contact>) -> Result<ContactPlan> {
        ContactPlan::new(
            EPOCH,
            (0.0, 1000.0),
            vec![NodeRecord::satellite("S1"), NodeRecord::cell("C1", 10.0, 20.0)],
            contacts,
        )
    }

    #[test]
    fn csv_row_maps_to_single_sgl_contact() {
        let text = format!(
            "epoch,{EPOCH}\nhorizon,0,900\n[nodes]\nid,kind,lat,lon\nS1,satellite,,\nC1,cell,10.0,20.0\n[contacts]\nt_start,t_end,from,to,delay_ms\n0,900,S1,C1,7.2\n"
        );
        let plan = parse_contact_plan(text.as_bytes(), PlanFormat::Csv).unwrap();
        assert_eq!(plan.contacts.len(), 1);
        let c = &plan.contacts[0];
        assert_eq!((c.t_start, c.t_end), (0.0, 900.0));
        assert_eq!(c.from, "S1");
        assert_eq!(c.to, "C1");
        assert_eq!(c.delay_ms, 7.2);
    }

    #[test]
    fn empty_contact_list_is_valid() {
        let plan = two_node_plan(vec![]).unwrap();
        assert!(plan.contacts.is_empty());
        assert!(validate(&plan).is_empty());
    }

    #[test]
    fn zero_duration_contact_rejected() {
        let err = two_node_plan(vec![Contact::new(5.0, 5.0, "S1", "C1", 1.0)]).unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("nonpositive-duration"), "{msg}"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_endpoint_violation() {
        let plan = ContactPlan {
            epoch: EPOCH.into(),
            horizon: (0.0, 100.0),
            nodes: vec![NodeRecord::satellite("S1")],
            contacts: vec![Contact::new(0.0, 10.0, "S1", "S9", 2.0)],
        };
        let v = validate(&plan);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "unknown-endpoint");
    }

    #[test]
    fn cell_to_cell_violation() {
        let plan = ContactPlan {
            epoch: EPOCH.into(),
            horizon: (0.0, 100.0),
            nodes: vec![NodeRecord::cell("C1", 0.0, 0.0), NodeRecord::cell("C2", 1.0, 1.0)],
            contacts: vec![Contact::new(0.0, 10.0, "C1", "C2", 2.0)],
        };
        let v = validate(&plan);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, "cell-to-cell-link");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let text = format!(
            "epoch,{EPOCH}\nhorizon,0,900\n[nodes]\nid,kind,lat,lon\nS1,satellite,,\n[contacts]\nt_start,t_end,from,to,delay_ms\nnot-a-number,900,S1,C1,7.2\n"
        );
        let err = parse_contact_plan(text.as_bytes(), PlanFormat::Csv).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 8),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_kind_is_schema_error() {
        let text = format!(
            "epoch,{EPOCH}\nhorizon,0,900\n[nodes]\nid,kind,lat,lon\nS1,rover,,\n[contacts]\nt_start,t_end,from,to,delay_ms\n"
        );
        let err = parse_contact_plan(text.as_bytes(), PlanFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn symmetric_flag_mirrors_contacts() {
        let text = format!(
            "epoch,{EPOCH}\nhorizon,0,900\nsymmetric,true\n[nodes]\nid,kind,lat,lon\nS1,satellite,,\nC1,cell,10.0,20.0\n[contacts]\nt_start,t_end,from,to,delay_ms\n0,900,S1,C1,7.2\n"
        );
        let plan = parse_contact_plan(text.as_bytes(), PlanFormat::Csv).unwrap();
        assert_eq!(plan.contacts.len(), 2);
        assert_eq!(plan.contacts[0].from, "C1");
        assert_eq!(plan.contacts[1].from, "S1");
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let plan = two_node_plan(vec![
            Contact::new(10.0, 30.0, "S1", "C1", 7.125),
            Contact::new(0.0, 20.0, "C1", "S1", 5.5),
        ])
        .unwrap();
        let emitted = to_csv_string(&plan);
        let reparsed = parse_contact_plan(emitted.as_bytes(), PlanFormat::Csv).unwrap();
        assert_eq!(plan, reparsed);
        assert_eq!(emitted, to_csv_string(&reparsed));
    }

    #[test]
    fn json_round_trip_is_identity() {
        let plan = two_node_plan(vec![Contact::new(0.0, 20.0, "C1", "S1", 5.527)]).unwrap();
        let emitted = to_json_string(&plan);
        let reparsed = parse_contact_plan(emitted.as_bytes(), PlanFormat::Json).unwrap();
        assert_eq!(plan, reparsed);
    }

    #[test]
    fn duplicate_contacts_collapse() {
        let plan = two_node_plan(vec![
            Contact::new(0.0, 20.0, "S1", "C1", 5.0),
            Contact::new(0.0, 20.0, "S1", "C1", 5.0),
        ])
        .unwrap();
        assert_eq!(plan.contacts.len(), 1);
    }

    #[test]
    fn canonical_order_is_total() {
        let a = two_node_plan(vec![
            Contact::new(10.0, 30.0, "S1", "C1", 7.0),
            Contact::new(0.0, 20.0, "C1", "S1", 5.0),
        ])
        .unwrap();
        let b = two_node_plan(vec![
            Contact::new(0.0, 20.0, "C1", "S1", 5.0),
            Contact::new(10.0, 30.0, "S1", "C1", 7.0),
        ])
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(to_csv_string(&a), to_csv_string(&b));
    }

    #[test]
    fn bad_epoch_rejected() {
        let text = "epoch,yesterday\nhorizon,0,900\n[nodes]\nid,kind,lat,lon\n[contacts]\nt_start,t_end,from,to,delay_ms\n";
        let err = parse_contact_plan(text.as_bytes(), PlanFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }
}
