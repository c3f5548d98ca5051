//! Plain-text edge-list format for graph sets.
//!
//! A file holds one or more graphs. Each graph starts with a header line
//! `n <count>` followed by one `u v [edge_type]` line per undirected edge,
//! with 0-indexed endpoints. Blank lines and lines starting with `#` are
//! ignored. When any edge of a graph carries a type column the graph is
//! labelled, and edges without a type get type 1.
//!
//! Node labels live in an optional sidecar file with the same `n <count>`
//! headers followed by `v node_type` lines; unlisted nodes get type 0.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Graph;

struct Block {
    n: usize,
    line: usize,
    rows: Vec<(usize, Vec<usize>)>,
}

fn blocks(text: &str) -> Result<Vec<Block>> {
    let mut out: Vec<Block> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let mut fields = body.split_whitespace();
        let first = fields.next().expect("non-empty line");
        if first == "n" {
            let n = fields
                .next()
                .ok_or_else(|| parse_err(line, "header is missing the node count"))?
                .parse::<usize>()
                .map_err(|e| parse_err(line, &format!("bad node count: {e}")))?;
            if fields.next().is_some() {
                return Err(parse_err(line, "trailing fields after header"));
            }
            out.push(Block { n, line, rows: Vec::new() });
            continue;
        }
        let block = out
            .last_mut()
            .ok_or_else(|| parse_err(line, "data before the first `n <count>` header"))?;
        let values = std::iter::once(first)
            .chain(fields)
            .map(|f| f.parse::<usize>().map_err(|e| parse_err(line, &format!("bad integer {f:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        block.rows.push((line, values));
    }
    Ok(out)
}

fn parse_err(line: usize, message: &str) -> Error {
    Error::Parse {
        line,
        message: message.to_string(),
    }
}

pub fn parse_graphs(text: &str) -> Result<Vec<Graph>> {
    blocks(text)?
        .into_iter()
        .map(|b| {
            let labelled = b.rows.iter().any(|(_, r)| r.len() == 3);
            let mut g = Graph::empty(b.n);
            let mut labels = vec![0u8; b.n * b.n];
            for (line, row) in &b.rows {
                let (u, v, t) = match row.as_slice() {
                    [u, v] => (*u, *v, 1),
                    [u, v, t] => (*u, *v, *t),
                    _ => return Err(parse_err(*line, "expected `u v [edge_type]`")),
                };
                if u >= b.n || v >= b.n {
                    return Err(parse_err(*line, &format!("endpoint out of range for n = {}", b.n)));
                }
                if u == v {
                    return Err(parse_err(*line, "self-loops are not supported"));
                }
                if t == 0 || t > u8::MAX as usize {
                    return Err(parse_err(*line, &format!("edge type {t} must be in 1..=255")));
                }
                g.add_edge(u, v).map_err(|e| parse_err(*line, &e.to_string()))?;
                labels[u * b.n + v] = t as u8;
                labels[v * b.n + u] = t as u8;
            }
            if labelled {
                g = g.with_edge_attrs(labels).map_err(|e| parse_err(b.line, &e.to_string()))?;
            }
            Ok(g)
        })
        .collect()
}

/// Attaches node labels from a sidecar to `graphs`, matched by position.
pub fn parse_node_attrs(text: &str, graphs: Vec<Graph>) -> Result<Vec<Graph>> {
    let blocks = blocks(text)?;
    if blocks.len() != graphs.len() {
        return Err(Error::Parse {
            line: blocks.last().map_or(0, |b| b.line),
            message: format!("{} node blocks for {} graphs", blocks.len(), graphs.len()),
        });
    }
    graphs
        .into_iter()
        .zip(blocks)
        .map(|(g, b)| {
            if b.n != g.n() {
                return Err(parse_err(b.line, &format!("node block has n = {}, graph has {}", b.n, g.n())));
            }
            let mut attrs = vec![0u8; b.n];
            for (line, row) in &b.rows {
                match row.as_slice() {
                    [v, t] if *v < b.n && *t <= u8::MAX as usize => attrs[*v] = *t as u8,
                    [_, _] => return Err(parse_err(*line, "node index or type out of range")),
                    _ => return Err(parse_err(*line, "expected `v node_type`")),
                }
            }
            g.with_node_attrs(attrs).map_err(|e| parse_err(b.line, &e.to_string()))
        })
        .collect()
}

pub fn write_graphs(graphs: &[Graph]) -> String {
    let mut out = String::new();
    for g in graphs {
        writeln!(out, "n {}", g.n()).unwrap();
        for (u, v) in g.edges() {
            if g.edge_attrs().is_some() {
                writeln!(out, "{u} {v} {}", g.edge_label(u, v)).unwrap();
            } else {
                writeln!(out, "{u} {v}").unwrap();
            }
        }
    }
    out
}

/// Sidecar for [`write_graphs`]; unlabelled graphs produce a header only.
pub fn write_node_attrs(graphs: &[Graph]) -> String {
    let mut out = String::new();
    for g in graphs {
        writeln!(out, "n {}", g.n()).unwrap();
        if let Some(attrs) = g.node_attrs() {
            for (v, t) in attrs.iter().enumerate() {
                writeln!(out, "{v} {t}").unwrap();
            }
        }
    }
    out
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Vec<Graph>> {
    parse_graphs(&std::fs::read_to_string(path)?)
}

/// Loads graphs and, when `nodes` is given, their node-label sidecar.
pub fn load_graph_set(edges: impl AsRef<Path>, nodes: Option<&Path>) -> Result<Vec<Graph>> {
    let graphs = load_edge_list(edges)?;
    match nodes {
        Some(p) => parse_node_attrs(&std::fs::read_to_string(p)?, graphs),
        None => Ok(graphs),
    }
}

pub fn save_edge_list(path: impl AsRef<Path>, graphs: &[Graph]) -> Result<()> {
    std::fs::write(path, write_graphs(graphs))?;
    Ok(())
}
