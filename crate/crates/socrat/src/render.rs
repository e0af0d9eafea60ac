//! Explanation renderers: versioned JSON, Graphviz DOT and a chunk-ordered
//! heatmap CSV.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};
use socrat_core::Explanation;

use crate::error::{AppError, Result};
use crate::formats::{from_versioned_json, to_versioned_json};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    HeatmapCsv,
}

impl std::str::FromStr for Format {
    type Err = AppError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            "heatmap_csv" | "heatmap-csv" | "csv" => Ok(Format::HeatmapCsv),
            _ => Err(AppError::Usage(format!("unknown format {s:?} (json, dot, heatmap_csv)"))),
        }
    }
}

/// An explanation together with the configuration that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationDocument {
    pub run_config: BTreeMap<String, String>,
    pub explanation: Explanation,
}

pub fn render(doc: &ExplanationDocument, format: Format) -> Result<String> {
    match format {
        Format::Json => to_versioned_json(doc),
        Format::Dot => Ok(render_dot(doc)),
        Format::HeatmapCsv => Ok(render_heatmap_csv(doc)),
    }
}

pub fn parse_json(text: &str) -> Result<ExplanationDocument> {
    from_versioned_json(text, "explanation")
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn render_dot(doc: &ExplanationDocument) -> String {
    let e = &doc.explanation;
    let g = &e.graph;
    let mut out = String::new();
    for (k, v) in &doc.run_config {
        let _ = writeln!(out, "// {k}={v}");
    }
    out.push_str("digraph explanation {\n  rankdir=LR;\n  node [shape=box];\n");
    for (c, chunk) in e.chunks.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{c} {{");
        let _ = writeln!(out, "    label=\"chunk {} (importance {:.4})\";", c + 1, chunk.importance);
        for &i in &chunk.x_nodes {
            let _ = writeln!(out, "    x{i} [label=\"{}\"];", dot_escape(&g.x_nodes.tokens()[i].surface));
        }
        for &j in &chunk.y_nodes {
            let _ = writeln!(out, "    y{j} [label=\"{}\", shape=ellipse];", dot_escape(&g.y_nodes.tokens()[j].surface));
        }
        out.push_str("  }\n");
    }
    for i in 0..g.n_inputs() {
        for j in 0..g.n_outputs() {
            let w = g.theta.get(i, j);
            if w > 0.0 {
                let _ = writeln!(out, "  x{i} -> y{j} [penwidth={:.3}];", 0.25 + 4.75 * w);
            }
        }
    }
    out.push_str("}\n");
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `θ` with rows and columns ordered by chunk. The first header row holds
/// the chunk number of each column, the second the output tokens; every
/// data row starts with its chunk number and input token.
pub fn render_heatmap_csv(doc: &ExplanationDocument) -> String {
    let e = &doc.explanation;
    let g = &e.graph;
    let rows: Vec<(usize, usize)> =
        e.chunks.iter().enumerate().flat_map(|(c, ch)| ch.x_nodes.iter().map(move |&i| (c + 1, i))).collect();
    let cols: Vec<(usize, usize)> =
        e.chunks.iter().enumerate().flat_map(|(c, ch)| ch.y_nodes.iter().map(move |&j| (c + 1, j))).collect();
    let mut out = String::new();
    for (k, v) in &doc.run_config {
        let _ = writeln!(out, "# {k}={v}");
    }
    out.push_str("chunk,");
    for (c, _) in &cols {
        let _ = write!(out, ",{c}");
    }
    out.push_str("\n,");
    for &(_, j) in &cols {
        let _ = write!(out, ",{}", csv_field(&g.y_nodes.tokens()[j].surface));
    }
    out.push('\n');
    for &(c, i) in &rows {
        let _ = write!(out, "{c},{}", csv_field(&g.x_nodes.tokens()[i].surface));
        for &(_, j) in &cols {
            let _ = write!(out, ",{:.6}", g.theta.get(i, j));
        }
        out.push('\n');
    }
    out
}
