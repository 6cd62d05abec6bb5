//! Group-level subgraphs on pivotal nodes and their DOT/CSV export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::cohort::Group;
use crate::diffgraph::DiffGraph;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::mfs::PivotalNodeSet;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    #[default]
    Mean,
    Median,
}

/// Entrywise mean (or median) of the group's matrices.
pub fn group_mean_graph<T: Scalar>(
    graphs: &[DiffGraph<T>],
    group: Group,
    aggregation: Aggregation,
) -> Result<Mat<T>> {
    let members: Vec<&DiffGraph<T>> = graphs.iter().filter(|g| g.group == group).collect();
    let Some(first) = members.first() else {
        return Err(Error::EmptyGroup(group.to_string()));
    };
    let d = first.dim();
    if let Some(bad) = members.iter().find(|g| g.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: bad.dim(),
        });
    }
    match aggregation {
        Aggregation::Mean => {
            let mut acc = Mat::zeros(d, d);
            for g in &members {
                acc.add_scaled(T::one(), &g.matrix)?;
            }
            Ok(acc.scaled(T::one() / T::of(members.len() as f64)))
        }
        Aggregation::Median => {
            let n = members.len();
            let mut buf = Vec::with_capacity(n);
            Ok(Mat::from_fn(d, d, |i, j| {
                buf.clear();
                buf.extend(members.iter().map(|g| g.matrix[(i, j)]));
                buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
                if n % 2 == 1 {
                    buf[n / 2]
                } else {
                    (buf[n / 2 - 1] + buf[n / 2]) / T::of(2.0)
                }
            }))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub node_a: usize,
    pub node_b: usize,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList<T> {
    /// `node_a < node_b`, sorted by `(node_a, node_b)`.
    pub edges: Vec<Edge<T>>,
    /// Every pivotal node, including those left without edges.
    pub node_names: BTreeMap<usize, String>,
    pub cutoff: T,
}

/// Off-diagonal pivotal pairs with `|weight| ≥ cutoff`, sign preserved.
pub fn apply_cutoff<T: Scalar>(
    matrix: &Mat<T>,
    nodes: &PivotalNodeSet,
    cutoff: T,
) -> Result<EdgeList<T>> {
    if !(cutoff > T::zero()) {
        return Err(Error::Config(format!("cutoff must be positive, got {cutoff}")));
    }
    if matrix.rows() != nodes.node_names.len() || !matrix.is_square() {
        return Err(Error::DimensionMismatch {
            expected: nodes.node_names.len(),
            found: matrix.rows(),
        });
    }
    let mut edges = Vec::new();
    for (pos, &a) in nodes.indices.iter().enumerate() {
        for &b in &nodes.indices[pos + 1..] {
            let w = matrix[(a, b)];
            if w.abs() >= cutoff {
                edges.push(Edge {
                    node_a: a,
                    node_b: b,
                    weight: w,
                });
            }
        }
    }
    Ok(EdgeList {
        edges,
        node_names: nodes
            .indices
            .iter()
            .map(|&i| (i, nodes.node_names[i].clone()))
            .collect(),
        cutoff,
    })
}

/// `%g`-style formatting with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn quote(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Undirected DOT graph. Nodes are sorted by name, edges by `(name_a, name_b)`;
/// negative edges are drawn dashed.
pub fn export_dot<T: Scalar>(edges: &EdgeList<T>) -> String {
    let mut names: Vec<&str> = edges.node_names.values().map(String::as_str).collect();
    names.sort_unstable();
    let mut lines: Vec<(String, String, T)> = edges
        .edges
        .iter()
        .map(|e| {
            let a = edges.node_names.get(&e.node_a).cloned().unwrap_or_default();
            let b = edges.node_names.get(&e.node_b).cloned().unwrap_or_default();
            if a <= b {
                (a, b, e.weight)
            } else {
                (b, a, e.weight)
            }
        })
        .collect();
    lines.sort_by(|x, y| (&x.0, &x.1).cmp(&(&y.0, &y.1)));

    if names.is_empty() && lines.is_empty() {
        return "graph G { }\n".into();
    }
    let mut out = String::from("graph G {\n");
    for n in names {
        let _ = writeln!(out, "  {};", quote(n));
    }
    for (a, b, w) in lines {
        let w = w.as_f64();
        let style = if w < 0.0 { ", style=dashed" } else { "" };
        let _ = writeln!(
            out,
            "  {} -- {} [weight={}{}];",
            quote(&a),
            quote(&b),
            format_sig6(w),
            style
        );
    }
    out.push_str("}\n");
    out
}

/// Recovers `(name_a, name_b, weight)` triples from [`export_dot`] output.
pub fn parse_dot_edges(text: &str) -> Result<Vec<(String, String, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if !line.contains(" -- ") {
            continue;
        }
        let bad = || Error::parse(lineno + 1, format!("malformed edge line {line:?}"));
        let (lhs, rest) = line.split_once(" -- ").ok_or_else(bad)?;
        let (rhs, attrs) = rest.split_once(" [").ok_or_else(bad)?;
        let weight = attrs
            .split([',', ']'])
            .map(str::trim)
            .find_map(|kv| kv.strip_prefix("weight="))
            .ok_or_else(bad)?
            .parse::<f64>()
            .map_err(|_| bad())?;
        out.push((unquote(lhs), unquote(rhs), weight));
    }
    Ok(out)
}

fn unquote(s: &str) -> String {
    let s = s.trim();
    let inner = s.strip_prefix('"').and_then(|x| x.strip_suffix('"')).unwrap_or(s);
    inner.replace("\\\"", "\"").replace("\\\\", "\\")
}

/// `node_a,node_b,weight` with region names and shortest round-trip weights.
pub fn edges_to_csv<T: Scalar>(edges: &EdgeList<T>) -> String {
    let mut out = String::from("node_a,node_b,weight\n");
    for e in &edges.edges {
        let _ = writeln!(
            out,
            "{},{},{}",
            edges.node_names[&e.node_a], edges.node_names[&e.node_b], e.weight
        );
    }
    out
}
