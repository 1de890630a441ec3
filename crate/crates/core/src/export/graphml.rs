use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{format_float, AttrValue, EdgeDoc, ExportError, GraphDocument, NodeDoc};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum KeyType {
    Long,
    Double,
    Str,
}

impl KeyType {
    fn name(self) -> &'static str {
        match self {
            KeyType::Long => "long",
            KeyType::Double => "double",
            KeyType::Str => "string",
        }
    }

    fn of(v: &AttrValue) -> Self {
        match v {
            AttrValue::Int(_) => KeyType::Long,
            AttrValue::Double(_) => KeyType::Double,
            AttrValue::Str(_) => KeyType::Str,
        }
    }

    fn merge(self, other: KeyType) -> KeyType {
        match (self, other) {
            (a, b) if a == b => a,
            (KeyType::Str, _) | (_, KeyType::Str) => KeyType::Str,
            _ => KeyType::Double,
        }
    }

    fn parse(self, text: &str) -> AttrValue {
        match self {
            KeyType::Long => text
                .trim()
                .parse()
                .map(AttrValue::Int)
                .unwrap_or_else(|_| AttrValue::Str(text.to_string())),
            KeyType::Double => parse_double(text)
                .map(AttrValue::Double)
                .unwrap_or_else(|| AttrValue::Str(text.to_string())),
            KeyType::Str => AttrValue::Str(text.to_string()),
        }
    }
}

fn parse_double(text: &str) -> Option<f64> {
    match text.trim() {
        "INF" => Some(f64::INFINITY),
        "-INF" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Value text under a declared key type (ints widen to doubles).
fn render_as(value: &AttrValue, ty: KeyType) -> String {
    match (value, ty) {
        (AttrValue::Int(i), KeyType::Double) => format_float(*i as f64),
        _ => value.render(),
    }
}

fn key_types<'a>(maps: impl Iterator<Item = &'a BTreeMap<String, AttrValue>>) -> BTreeMap<String, KeyType> {
    let mut types: BTreeMap<String, KeyType> = BTreeMap::new();
    for m in maps {
        for (k, v) in m {
            let t = KeyType::of(v);
            types
                .entry(k.clone())
                .and_modify(|cur| *cur = cur.merge(t))
                .or_insert(t);
        }
    }
    types
}

/// Serializes a document as GraphML with typed keys declared once.
pub fn write_graphml(doc: &GraphDocument) -> String {
    let graph_keys = key_types(std::iter::once(&doc.attrs));
    let node_keys = key_types(doc.nodes.iter().map(|n| &n.attrs));
    let has_distance = doc.edges.iter().any(|e| e.distance.is_some());

    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\" \
         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" \
         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns \
         http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n",
    );
    let mut next_key = 0;
    let mut declare = |out: &mut String, domain: &'static str, name: &str, ty: KeyType| {
        let id = format!("d{next_key}");
        next_key += 1;
        let _ = writeln!(
            out,
            "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{}\" attr.type=\"{}\"/>",
            escape(name),
            ty.name()
        );
        id
    };
    let mut graph_ids = Vec::new();
    for (name, ty) in &graph_keys {
        graph_ids.push((name, *ty, declare(&mut out, "graph", name, *ty)));
    }
    let mut node_ids = BTreeMap::new();
    for (name, ty) in &node_keys {
        node_ids.insert(name.as_str(), (*ty, declare(&mut out, "node", name, *ty)));
    }
    let weight_id = declare(&mut out, "edge", "weight", KeyType::Double);
    let distance_id = has_distance.then(|| declare(&mut out, "edge", "distance", KeyType::Double));

    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for (name, ty, id) in &graph_ids {
        let _ = writeln!(
            out,
            "    <data key=\"{id}\">{}</data>",
            escape(render_as(&doc.attrs[*name], *ty).as_str())
        );
    }
    for node in &doc.nodes {
        if node.attrs.is_empty() {
            let _ = writeln!(out, "    <node id=\"{}\"/>", escape(node.id.as_str()));
            continue;
        }
        let _ = writeln!(out, "    <node id=\"{}\">", escape(node.id.as_str()));
        for (name, value) in &node.attrs {
            let (ty, id) = &node_ids[name.as_str()];
            let _ = writeln!(
                out,
                "      <data key=\"{id}\">{}</data>",
                escape(render_as(value, *ty).as_str())
            );
        }
        out.push_str("    </node>\n");
    }
    for edge in &doc.edges {
        let _ = writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            escape(doc.nodes[edge.source].id.as_str()),
            escape(doc.nodes[edge.target].id.as_str())
        );
        let _ = writeln!(out, "      <data key=\"{weight_id}\">{}</data>", format_float(edge.weight));
        if let (Some(id), Some(d)) = (&distance_id, edge.distance) {
            let _ = writeln!(out, "      <data key=\"{id}\">{}</data>", format_float(d));
        }
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

struct KeyDecl {
    name: String,
    ty: KeyType,
}

enum Owner {
    Graph,
    Node(usize),
    Edge(usize),
}

struct PendingEdge {
    source: String,
    target: String,
    weight: f64,
    distance: Option<f64>,
}

fn attr(e: &BytesStart<'_>, name: &[u8]) -> Result<Option<String>, ExportError> {
    for a in e.attributes() {
        let a = a.map_err(|err| ExportError::Xml(err.to_string()))?;
        if a.key.local_name().as_ref() == name {
            let v = a.unescape_value().map_err(|err| ExportError::Xml(err.to_string()))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

fn required(e: &BytesStart<'_>, name: &str) -> Result<String, ExportError> {
    attr(e, name.as_bytes())?.ok_or_else(|| {
        ExportError::Malformed(format!(
            "<{}> without {name}",
            String::from_utf8_lossy(e.local_name().as_ref())
        ))
    })
}

/// Parses GraphML produced by [`write_graphml`] or by common network tools.
/// Only the first `<graph>` element is read; edges are taken as undirected.
pub fn parse_graphml(text: &str) -> Result<GraphDocument, ExportError> {
    let mut reader = Reader::from_str(text);
    reader.config_mut().trim_text(false);

    let mut keys: HashMap<String, KeyDecl> = HashMap::new();
    let mut doc = GraphDocument::default();
    let mut pending: Vec<PendingEdge> = Vec::new();
    let mut owner: Option<Owner> = None;
    let mut data_key: Option<String> = None;
    let mut data_text = String::new();
    let mut graph_depth = 0usize;

    loop {
        let event = reader
            .read_event()
            .map_err(|e| ExportError::Xml(format!("at byte {}: {e}", reader.buffer_position())))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.local_name().as_ref() {
                    b"key" => {
                        let id = required(e, "id")?;
                        let ty = match attr(e, b"attr.type")?.as_deref() {
                            Some("int" | "long") => KeyType::Long,
                            Some("double" | "float") => KeyType::Double,
                            _ => KeyType::Str,
                        };
                        keys.insert(
                            id.clone(),
                            KeyDecl {
                                name: attr(e, b"attr.name")?.unwrap_or(id),
                                ty,
                            },
                        );
                    }
                    b"graph" => {
                        graph_depth += 1;
                        if graph_depth == 1 {
                            owner = Some(Owner::Graph);
                        }
                    }
                    b"node" if graph_depth == 1 => {
                        doc.nodes.push(NodeDoc {
                            id: required(e, "id")?,
                            attrs: BTreeMap::new(),
                        });
                        owner = Some(if empty { Owner::Graph } else { Owner::Node(doc.nodes.len() - 1) });
                    }
                    b"edge" if graph_depth == 1 => {
                        pending.push(PendingEdge {
                            source: required(e, "source")?,
                            target: required(e, "target")?,
                            weight: 1.0,
                            distance: None,
                        });
                        owner = Some(if empty { Owner::Graph } else { Owner::Edge(pending.len() - 1) });
                    }
                    b"data" if graph_depth == 1 => {
                        data_key = Some(required(e, "key")?);
                        data_text.clear();
                        if empty {
                            data_key = None;
                        }
                    }
                    _ => {}
                }
            }
            Event::Text(t) if data_key.is_some() => {
                data_text.push_str(&t.unescape().map_err(|e| ExportError::Xml(e.to_string()))?);
            }
            Event::CData(t) if data_key.is_some() => {
                data_text.push_str(&String::from_utf8_lossy(&t));
            }
            Event::End(ref e) => match e.local_name().as_ref() {
                b"data" => {
                    if let Some(key) = data_key.take() {
                        let decl = keys
                            .get(&key)
                            .ok_or_else(|| ExportError::Malformed(format!("undeclared key {key:?}")))?;
                        let value = decl.ty.parse(&data_text);
                        match &owner {
                            Some(Owner::Graph) => {
                                doc.attrs.insert(decl.name.clone(), value);
                            }
                            Some(Owner::Node(i)) => {
                                doc.nodes[*i].attrs.insert(decl.name.clone(), value);
                            }
                            Some(Owner::Edge(i)) => {
                                let edge = &mut pending[*i];
                                let number = parse_double(&data_text);
                                match (decl.name.as_str(), number) {
                                    ("weight", Some(w)) => edge.weight = w,
                                    ("distance", Some(d)) => edge.distance = Some(d),
                                    _ => {}
                                }
                            }
                            None => {}
                        }
                    }
                }
                b"node" | b"edge" if graph_depth == 1 => owner = Some(Owner::Graph),
                b"graph" => {
                    graph_depth -= 1;
                    if graph_depth == 0 {
                        break;
                    }
                }
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }

    let index = doc.index()?;
    let mut edges = Vec::with_capacity(pending.len());
    for e in pending {
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| ExportError::UnknownNode(id.to_string()))
        };
        edges.push(EdgeDoc {
            source: lookup(&e.source)?,
            target: lookup(&e.target)?,
            weight: e.weight,
            distance: e.distance,
        });
    }
    doc.edges = edges;
    Ok(doc)
}
