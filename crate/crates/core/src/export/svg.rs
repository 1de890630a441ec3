use std::collections::HashMap;
use std::fmt::Write as _;

use quick_xml::escape::escape;

use super::{format_float, ExportError, GraphDocument};

/// Fixed 12-color palette; community `c` uses `PALETTE[c % 12]`.
pub const PALETTE: [&str; 12] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22",
    "#17becf", "#aec7e8", "#ffbb78",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
    pub height: f64,
    pub margin: f64,
    /// Numeric node attribute mapped linearly onto `[min_radius, max_radius]`.
    pub size_attr: Option<String>,
    /// Integer node attribute selecting a palette color.
    pub color_attr: Option<String>,
    pub min_radius: f64,
    pub max_radius: f64,
    pub default_radius: f64,
    pub min_stroke: f64,
    pub max_stroke: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            width: 1000.0,
            height: 1000.0,
            margin: 20.0,
            size_attr: None,
            color_attr: Some("community".into()),
            min_radius: 2.0,
            max_radius: 12.0,
            default_radius: 4.0,
            min_stroke: 0.25,
            max_stroke: 6.0,
        }
    }
}

fn linear(value: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi > lo {
        out_lo + (value - lo) / (hi - lo) * (out_hi - out_lo)
    } else {
        (out_lo + out_hi) / 2.0
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// Renders nodes as circles and edges as lines. Stroke widths map the
/// observed weight range linearly onto `[min_stroke, max_stroke]`.
pub fn render_svg(
    doc: &GraphDocument,
    positions: &HashMap<String, [f64; 2]>,
    style: &SvgStyle,
) -> Result<String, ExportError> {
    let points: Vec<[f64; 2]> = doc
        .nodes
        .iter()
        .map(|n| {
            positions
                .get(&n.id)
                .copied()
                .ok_or_else(|| ExportError::MissingPosition(n.id.clone()))
        })
        .collect::<Result<_, _>>()?;

    let (x_lo, x_hi) = range(points.iter().map(|p| p[0]));
    let (y_lo, y_hi) = range(points.iter().map(|p| p[1]));
    let span = (x_hi - x_lo).max(y_hi - y_lo);
    let inner = (style.width.min(style.height) - 2.0 * style.margin).max(1.0);
    let scale = if span > 0.0 { inner / span } else { 1.0 };
    let project = |p: [f64; 2]| {
        if points.len() == 1 || span == 0.0 {
            return [style.width / 2.0, style.height / 2.0];
        }
        let x = style.width / 2.0 + (p[0] - (x_lo + x_hi) / 2.0) * scale;
        // SVG y grows downward
        let y = style.height / 2.0 - (p[1] - (y_lo + y_hi) / 2.0) * scale;
        [x, y]
    };

    let radii: Vec<f64> = match style.size_attr.as_deref().and_then(|a| doc.numeric_attr(a)) {
        Some(sizes) => {
            let (lo, hi) = range(sizes.iter().copied());
            sizes
                .iter()
                .map(|&s| linear(s, lo, hi, style.min_radius, style.max_radius))
                .collect()
        }
        None => vec![style.default_radius; doc.nodes.len()],
    };
    let colors: Vec<&str> = match style.color_attr.as_deref().and_then(|a| doc.numeric_attr(a)) {
        Some(groups) => groups
            .iter()
            .map(|&g| PALETTE[(g.max(0.0) as usize) % PALETTE.len()])
            .collect(),
        None => vec!["#4c72b0"; doc.nodes.len()],
    };

    let (w_lo, w_hi) = range(doc.edges.iter().map(|e| e.weight));
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = format_float(style.width),
        h = format_float(style.height)
    );
    if !doc.edges.is_empty() {
        out.push_str("<g stroke=\"#888888\" stroke-opacity=\"0.6\">\n");
        for e in &doc.edges {
            let a = project(points[e.source]);
            let b = project(points[e.target]);
            let width = linear(e.weight, w_lo, w_hi, style.min_stroke, style.max_stroke);
            let _ = writeln!(
                out,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke-width=\"{}\"/>",
                format_float(a[0]),
                format_float(a[1]),
                format_float(b[0]),
                format_float(b[1]),
                format_float(width)
            );
        }
        out.push_str("</g>\n");
    }
    if !doc.nodes.is_empty() {
        out.push_str("<g stroke=\"#ffffff\" stroke-width=\"0.5\">\n");
        for (i, node) in doc.nodes.iter().enumerate() {
            let c = project(points[i]);
            let _ = writeln!(
                out,
                "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"><title>{}</title></circle>",
                format_float(c[0]),
                format_float(c[1]),
                format_float(radii[i]),
                colors[i],
                escape(node.id.as_str())
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out)
}
