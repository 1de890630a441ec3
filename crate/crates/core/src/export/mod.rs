//! Serialization of graphs, positions and figures.
//!
//! All floating-point values written by this module use 9 significant
//! digits (see [`format_float`]), so outputs are byte-stable across runs.

mod graphml;
mod json;
mod positions;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fold::{AccountGraph, CountryGraph};
use crate::ingest::ImageRecord;
use crate::simnet::{Edge, GraphError, SimilarityGraph};

pub use graphml::{parse_graphml, write_graphml};
pub use json::{parse_json_graph, write_json_graph};
pub use positions::{parse_positions, write_positions};
pub use svg::{render_svg, SvgStyle, PALETTE};

/// Version of the node/edge attribute layout in graph documents.
pub const SCHEMA_VERSION: i64 = 1;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("XML error: {0}")]
    Xml(String),
    #[error("malformed graph document: {0}")]
    Malformed(String),
    #[error("unknown node id {0:?}")]
    UnknownNode(String),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("no position for node {0:?}")]
    MissingPosition(String),
    #[error("positions file: {0}")]
    Positions(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Formats with 9 significant digits, in plain decimal notation for
/// magnitudes in `[1e-6, 1e15)` and scientific notation otherwise.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "INF".into() } else { "-INF".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    let body = if (0..15).contains(&exp) {
        let int_len = exp as usize + 1;
        let padded = format!("{digits:0<width$}", width = int_len.max(digits.len()));
        let (int_part, frac) = padded.split_at(int_len);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            int_part.to_string()
        } else {
            format!("{int_part}.{frac}")
        }
    } else if (-6..0).contains(&exp) {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("0.{zeros}{}", digits.trim_end_matches('0'))
    } else {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        if rest.is_empty() {
            format!("{lead}e{exp}")
        } else {
            format!("{lead}.{rest}e{exp}")
        }
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

/// Rounds to the value that [`format_float`] prints.
pub fn round_sig9(x: f64) -> f64 {
    match format_float(x).as_str() {
        "NaN" => f64::NAN,
        "INF" => f64::INFINITY,
        "-INF" => f64::NEG_INFINITY,
        s => s.parse().expect("formatted float parses"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Int(i64),
    Double(f64),
    Str(String),
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Int(i) => Some(*i as f64),
            AttrValue::Double(d) => Some(*d),
            AttrValue::Str(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Str(s) => Some(s),
            _ => None,
        }
    }

    fn render(&self) -> String {
        match self {
            AttrValue::Int(i) => i.to_string(),
            AttrValue::Double(d) => format_float(*d),
            AttrValue::Str(s) => s.clone(),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<usize> for AttrValue {
    fn from(v: usize) -> Self {
        AttrValue::Int(v as i64)
    }
}

impl From<u64> for AttrValue {
    fn from(v: u64) -> Self {
        AttrValue::Int(v as i64)
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Double(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: String,
    #[serde(default)]
    pub attrs: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDoc {
    /// Node index of one endpoint.
    pub source: usize,
    pub target: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

/// Format-neutral undirected graph with node attributes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GraphDocument {
    pub attrs: BTreeMap<String, AttrValue>,
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<EdgeDoc>,
}

/// Optional per-node annotations of an image graph document.
#[derive(Debug, Clone, Copy, Default)]
pub struct ImageAnnotations<'a> {
    pub community: Option<&'a [usize]>,
    pub positions: Option<&'a [[f64; 2]]>,
}

impl GraphDocument {
    fn with_kind(kind: &str) -> Self {
        let mut attrs = BTreeMap::new();
        attrs.insert("schema_version".to_string(), AttrValue::Int(SCHEMA_VERSION));
        attrs.insert("kind".to_string(), AttrValue::from(kind));
        GraphDocument {
            attrs,
            ..Default::default()
        }
    }

    /// Image graph with one node per record, in row order.
    pub fn from_image_graph(
        graph: &SimilarityGraph,
        records: &[ImageRecord],
        notes: ImageAnnotations<'_>,
    ) -> Self {
        let mut doc = Self::with_kind("image");
        doc.nodes = records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut attrs = BTreeMap::new();
                if let Some(a) = &r.account_id {
                    attrs.insert("account".into(), AttrValue::from(a.as_str()));
                }
                attrs.insert("country".into(), AttrValue::from(r.country.as_str()));
                if let Some(c) = notes.community {
                    attrs.insert("community".into(), AttrValue::from(c[i]));
                }
                if let Some(p) = notes.positions {
                    attrs.insert("x".into(), AttrValue::Double(p[i][0]));
                    attrs.insert("y".into(), AttrValue::Double(p[i][1]));
                }
                NodeDoc {
                    id: r.image_id.clone(),
                    attrs,
                }
            })
            .collect();
        doc.edges = graph
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                source: e.u,
                target: e.v,
                weight: e.weight,
                distance: Some(e.distance),
            })
            .collect();
        doc
    }

    pub fn from_account_graph(graph: &AccountGraph) -> Self {
        let mut doc = Self::with_kind("account");
        doc.attrs
            .insert("intra_account_pairs".into(), AttrValue::from(graph.intra_account_pairs));
        doc.attrs
            .insert("unattributed_edges".into(), AttrValue::from(graph.unattributed_edges));
        doc.nodes = graph
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.account_id.clone(),
                attrs: BTreeMap::from([("image_count".to_string(), AttrValue::from(n.image_count))]),
            })
            .collect();
        doc.edges = folded_edges(&graph.edges);
        doc
    }

    pub fn from_country_graph(graph: &CountryGraph) -> Self {
        let mut doc = Self::with_kind("country");
        doc.nodes = graph
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.country.clone(),
                attrs: BTreeMap::from([
                    ("total_images".to_string(), AttrValue::from(n.total_images)),
                    ("unique_authors".to_string(), AttrValue::from(n.unique_authors)),
                    ("self_weight".to_string(), AttrValue::from(n.self_weight)),
                ]),
            })
            .collect();
        doc.edges = folded_edges(&graph.edges);
        doc
    }

    pub fn node_ids(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.id.as_str())
    }

    /// Node index by id.
    pub fn index(&self) -> Result<BTreeMap<&str, usize>, ExportError> {
        let mut index = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if index.insert(n.id.as_str(), i).is_some() {
                return Err(ExportError::DuplicateNode(n.id.clone()));
            }
        }
        Ok(index)
    }

    /// Rebuilds a similarity graph over the document's node order. Missing
    /// distances are recovered from the weights.
    pub fn to_similarity_graph(&self) -> Result<SimilarityGraph, ExportError> {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                u: e.source,
                v: e.target,
                distance: e.distance.unwrap_or(1.0 / e.weight - 1.0).max(0.0),
                weight: e.weight,
            })
            .collect();
        Ok(SimilarityGraph::from_edges(self.nodes.len(), edges)?)
    }

    /// Image records recovered from an image graph document. Nodes without
    /// a `country` attribute get an empty country.
    pub fn image_records(&self) -> Vec<ImageRecord> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(row, n)| ImageRecord {
                image_id: n.id.clone(),
                account_id: n.attrs.get("account").map(AttrValue::render),
                country: n.attrs.get("country").map(AttrValue::render).unwrap_or_default(),
                row,
            })
            .collect()
    }

    /// Numeric node attribute, if every node carries it.
    pub fn numeric_attr(&self, name: &str) -> Option<Vec<f64>> {
        self.nodes
            .iter()
            .map(|n| n.attrs.get(name).and_then(AttrValue::as_f64))
            .collect()
    }

    /// Node attribute rendered as text for every node (missing → empty).
    pub fn text_attr(&self, name: &str) -> Vec<String> {
        self.nodes
            .iter()
            .map(|n| n.attrs.get(name).map(AttrValue::render).unwrap_or_default())
            .collect()
    }
}

fn folded_edges(edges: &[crate::fold::FoldedEdge]) -> Vec<EdgeDoc> {
    edges
        .iter()
        .map(|e| EdgeDoc {
            source: e.a,
            target: e.b,
            weight: e.weight as f64,
            distance: None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_float(0.0), "0");
        assert_eq!(format_float(1.0), "1");
        assert_eq!(format_float(-2.5), "-2.5");
        assert_eq!(format_float(1.0 / 3.0), "0.333333333");
        assert_eq!(format_float(2.0 / 3.0), "0.666666667");
        assert_eq!(format_float(123456789012.0), "123456789000");
        assert_eq!(format_float(0.000123456789123), "0.000123456789");
        assert_eq!(format_float(1.5e-9), "1.5e-9");
        assert_eq!(format_float(6.02214076e23), "6.02214076e23");
        assert_eq!(format_float(12.727922061357855), "12.7279221");
        assert_eq!(format_float(f64::INFINITY), "INF");
    }

    #[test]
    fn rounding_is_idempotent() {
        for x in [0.1, 1.0 / 7.0, 12345.6789123, -9.87654321e-8, 1e20 / 3.0] {
            let r = round_sig9(x);
            assert_eq!(round_sig9(r), r);
            assert_eq!(format_float(r), format_float(x));
            assert!(((r - x) / x).abs() < 1e-8);
        }
    }
}
