use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{round_sig9, AttrValue, EdgeDoc, ExportError, GraphDocument, NodeDoc, SCHEMA_VERSION};

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    schema_version: i64,
    directed: bool,
    #[serde(default)]
    attrs: BTreeMap<String, AttrValue>,
    nodes: Vec<NodeDoc>,
    edges: Vec<JsonEdge>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    source: String,
    target: String,
    weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
}

fn rounded(attrs: &BTreeMap<String, AttrValue>) -> BTreeMap<String, AttrValue> {
    attrs
        .iter()
        .map(|(k, v)| {
            let v = match v {
                AttrValue::Double(d) => AttrValue::Double(round_sig9(*d)),
                other => other.clone(),
            };
            (k.clone(), v)
        })
        .collect()
}

/// Compact JSON edge list; one object with `nodes` and `edges` arrays.
pub fn write_json_graph(doc: &GraphDocument) -> String {
    let graph = JsonGraph {
        schema_version: SCHEMA_VERSION,
        directed: false,
        attrs: rounded(&doc.attrs),
        nodes: doc
            .nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.id.clone(),
                attrs: rounded(&n.attrs),
            })
            .collect(),
        edges: doc
            .edges
            .iter()
            .map(|e| JsonEdge {
                source: doc.nodes[e.source].id.clone(),
                target: doc.nodes[e.target].id.clone(),
                weight: round_sig9(e.weight),
                distance: e.distance.map(round_sig9),
            })
            .collect(),
    };
    let mut text = serde_json::to_string(&graph).expect("graph serializes");
    text.push('\n');
    text
}

pub fn parse_json_graph(text: &str) -> Result<GraphDocument, ExportError> {
    let graph: JsonGraph = serde_json::from_str(text)?;
    if graph.schema_version != SCHEMA_VERSION {
        return Err(ExportError::Malformed(format!(
            "unsupported schema_version {}",
            graph.schema_version
        )));
    }
    let mut doc = GraphDocument {
        attrs: graph.attrs,
        nodes: graph.nodes,
        edges: Vec::new(),
    };
    let index = doc.index()?;
    let lookup = |id: &str| {
        index
            .get(id)
            .copied()
            .ok_or_else(|| ExportError::UnknownNode(id.to_string()))
    };
    let edges = graph
        .edges
        .iter()
        .map(|e| {
            Ok(EdgeDoc {
                source: lookup(&e.source)?,
                target: lookup(&e.target)?,
                weight: e.weight,
                distance: e.distance,
            })
        })
        .collect::<Result<Vec<_>, ExportError>>()?;
    doc.edges = edges;
    Ok(doc)
}
