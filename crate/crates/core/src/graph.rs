//! Metric graphs: vertices, oriented edges carrying intervals and Airy
//! coefficients, endpoint incidence and the layout of the boundary trace
//! spaces.
//!
//! An edge `e` is the interval `(a_e, b_e)` with `a_e` possibly `-inf` and
//! `b_e` possibly `+inf`. Edges with a finite start form the *left* family,
//! edges with a finite end form the *right* family. Each finite endpoint is
//! attached to exactly one vertex.
//!
//! Trace spaces are laid out edge-major: edges in lexicographic id order, and
//! for each edge the components `(u, u', u'')`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which endpoint family a trace belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Starting points `a_e` (edges in `E_l`).
    Left,
    /// Termination points `b_e` (edges in `E_r`).
    Right,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Left => f.write_str("left"),
            Side::Right => f.write_str("right"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Edge {
    pub id: String,
    #[serde(with = "bound")]
    pub a: f64,
    #[serde(with = "bound")]
    pub b: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    pub alpha: f64,
    pub beta: f64,
}

impl Edge {
    pub fn finite(id: &str, a: f64, b: f64, from: &str, to: &str, alpha: f64, beta: f64) -> Self {
        Edge {
            id: id.to_string(),
            a,
            b,
            from: Some(from.to_string()),
            to: Some(to.to_string()),
            alpha,
            beta,
        }
    }

    /// `(-inf, b]` ending at `to`.
    pub fn incoming_halfline(id: &str, b: f64, to: &str, alpha: f64, beta: f64) -> Self {
        Edge {
            id: id.to_string(),
            a: f64::NEG_INFINITY,
            b,
            from: None,
            to: Some(to.to_string()),
            alpha,
            beta,
        }
    }

    /// `[a, inf)` starting at `from`.
    pub fn outgoing_halfline(id: &str, a: f64, from: &str, alpha: f64, beta: f64) -> Self {
        Edge {
            id: id.to_string(),
            a,
            b: f64::INFINITY,
            from: Some(from.to_string()),
            to: None,
            alpha,
            beta,
        }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn has_left(&self) -> bool {
        self.a.is_finite()
    }

    pub fn has_right(&self) -> bool {
        self.b.is_finite()
    }

    pub fn is_finite(&self) -> bool {
        self.has_left() && self.has_right()
    }
}

/// Endpoints serialize as numbers, with `"-inf"` / `"inf"` for the
/// semi-infinite ends.
mod bound {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(x),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(D::Error::custom(format!(
                    "expected a number, \"inf\" or \"-inf\", got \"{other}\""
                ))),
            },
        }
    }
}

/// Unvalidated graph description, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            subject: subject.into(),
            message: message.into(),
        });
    }

    pub fn mentions(&self, needle: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no violations");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.subject, v.message)?;
        }
        Ok(())
    }
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Lists every structural violation. Violations are data: the graph is
    /// admissible iff the report is empty.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        let mut seen = BTreeSet::new();
        for v in &self.vertices {
            if !seen.insert(v.as_str()) {
                report.push(v.clone(), "duplicate vertex id");
            }
        }
        let mut ids = BTreeSet::new();
        for e in &self.edges {
            let subject = format!("edge {}", e.id);
            if !ids.insert(e.id.as_str()) {
                report.push(&subject, "duplicate edge id");
            }
            if !(e.a < e.b) || e.a == f64::INFINITY || e.b == f64::NEG_INFINITY {
                report.push(&subject, "a_e < b_e fails");
            }
            if !(e.alpha > 0.0 && e.alpha.is_finite()) {
                report.push(&subject, "alpha must be positive");
            }
            if !e.beta.is_finite() {
                report.push(&subject, "beta must be finite");
            }
            check_end(&mut report, &subject, "start", e.a.is_finite(), &e.from, &seen);
            check_end(&mut report, &subject, "end", e.b.is_finite(), &e.to, &seen);
        }
        report
    }
}

fn check_end(
    report: &mut ValidationReport,
    subject: &str,
    which: &str,
    finite: bool,
    vertex: &Option<String>,
    vertices: &BTreeSet<&str>,
) {
    match (finite, vertex) {
        (true, None) => report.push(subject, format!("dangling finite {which} point")),
        (false, Some(_)) => report.push(
            subject,
            format!("infinite {which} point must not be attached to a vertex"),
        ),
        (true, Some(v)) if !vertices.contains(v.as_str()) => {
            report.push(subject, format!("{which} point attached to unknown vertex `{v}`"))
        }
        _ => {}
    }
}

/// Edges starting (`left`) and terminating (`right`) at one vertex, as edge
/// indices in layout order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Incidence {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceLayout {
    pub side: Side,
    /// `(edge id, derivative order)` per position.
    pub entries: Vec<(String, usize)>,
}

impl TraceLayout {
    pub fn dimension(&self) -> usize {
        self.entries.len()
    }

    pub fn index_of(&self, edge: &str, k: usize) -> Option<usize> {
        self.entries.iter().position(|(e, kk)| e == edge && *kk == k)
    }
}

/// A validated metric graph. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    vertex_index: BTreeMap<String, usize>,
    left_slot: Vec<Option<usize>>,
    right_slot: Vec<Option<usize>>,
    min_length: f64,
}

impl MetricGraph {
    pub fn new(spec: GraphSpec) -> Result<Self> {
        let report = spec.validate();
        if !report.is_valid() {
            return Err(Error::InvalidGraph(report));
        }
        let GraphSpec { vertices, mut edges } = spec;
        edges.sort_by(|x, y| x.id.cmp(&y.id));
        let vertex_index = vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.clone(), i))
            .collect();
        let mut left_slot = Vec::with_capacity(edges.len());
        let mut right_slot = Vec::with_capacity(edges.len());
        let (mut nl, mut nr) = (0, 0);
        for e in &edges {
            left_slot.push(e.has_left().then(|| {
                nl += 1;
                nl - 1
            }));
            right_slot.push(e.has_right().then(|| {
                nr += 1;
                nr - 1
            }));
        }
        let min_length = edges.iter().map(Edge::length).fold(f64::INFINITY, f64::min);
        Ok(MetricGraph {
            vertices,
            edges,
            vertex_index,
            left_slot,
            right_slot,
            min_length,
        })
    }

    pub fn from_parts(vertices: &[&str], edges: Vec<Edge>) -> Result<Self> {
        Self::new(GraphSpec {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::new(GraphSpec::from_json(text)?)
    }

    pub fn to_spec(&self) -> GraphSpec {
        GraphSpec {
            vertices: self.vertices.clone(),
            edges: self.edges.clone(),
        }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    /// Edges in layout (lexicographic id) order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    pub fn vertex_index(&self, v: &str) -> Option<usize> {
        self.vertex_index.get(v).copied()
    }

    /// `inf_e (b_e - a_e)`, the positive lower bound on edge lengths.
    pub fn min_length(&self) -> f64 {
        self.min_length
    }

    pub fn is_finite(&self) -> bool {
        self.edges.iter().all(Edge::is_finite)
    }

    /// Indices of the edges in `E_l` or `E_r`, in layout order.
    pub fn side_edges(&self, side: Side) -> Vec<usize> {
        let slots = self.slots(side);
        (0..self.edges.len()).filter(|&i| slots[i].is_some()).collect()
    }

    pub fn side_count(&self, side: Side) -> usize {
        self.slots(side).iter().flatten().count()
    }

    fn slots(&self, side: Side) -> &[Option<usize>] {
        match side {
            Side::Left => &self.left_slot,
            Side::Right => &self.right_slot,
        }
    }

    /// Position of edge `e` within the `side` family (its block index in the
    /// trace layout), if it has that endpoint.
    pub fn slot(&self, side: Side, edge: usize) -> Option<usize> {
        self.slots(side)[edge]
    }

    pub fn incidence(&self, v: &str) -> Result<Incidence> {
        if !self.vertex_index.contains_key(v) {
            return Err(Error::UnknownVertex(v.to_string()));
        }
        let pick = |side: Side| {
            self.side_edges(side)
                .into_iter()
                .filter(|&i| {
                    let e = &self.edges[i];
                    let end = match side {
                        Side::Left => &e.from,
                        Side::Right => &e.to,
                    };
                    end.as_deref() == Some(v)
                })
                .collect()
        };
        Ok(Incidence {
            left: pick(Side::Left),
            right: pick(Side::Right),
        })
    }

    pub fn trace_layout(&self, side: Side) -> TraceLayout {
        let entries = self
            .side_edges(side)
            .into_iter()
            .flat_map(|i| (0..3).map(move |k| (i, k)))
            .map(|(i, k)| (self.edges[i].id.clone(), k))
            .collect();
        TraceLayout { side, entries }
    }

    /// Global trace-layout positions owned by vertex `v` on `side`, in
    /// layout order (three consecutive positions per incident edge).
    pub fn vertex_positions(&self, v: &str, side: Side) -> Result<Vec<usize>> {
        let inc = self.incidence(v)?;
        let edges = match side {
            Side::Left => inc.left,
            Side::Right => inc.right,
        };
        Ok(edges
            .into_iter()
            .flat_map(|e| {
                let s = self.slot(side, e).expect("incident edge has this endpoint");
                (0..3).map(move |k| 3 * s + k)
            })
            .collect())
    }
}
