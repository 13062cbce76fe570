//! Plain-text formats for graphs, vertex weights, point clouds and signals.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! write followed by a read reproduces every value bit for bit. Blank lines
//! and lines starting with `#` are skipped on input, except for the
//! `#vertices N` header of an edge list.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{PointCloud, WeightedGraph};

/// Edges as `(i, j, w)` plus the declared vertex count.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeList {
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

fn parse_f64(text: &str, line: usize) -> Result<f64> {
    let v: f64 = text.trim().parse().map_err(|e| Error::Parse { line, message: format!("`{}`: {e}", text.trim()) })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite value `{}`", text.trim()) });
    }
    Ok(v)
}

fn data_lines<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, String)>> {
    input.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(e.into())),
        Ok(l) if l.trim().is_empty() || l.trim_start().starts_with('#') => None,
        Ok(l) => Some(Ok((i + 1, l))),
    })
}

pub fn read_edge_list<R: BufRead>(input: R) -> Result<EdgeList> {
    let mut n_vertices = None;
    let mut edges = Vec::new();
    for (index, line) in input.lines().enumerate() {
        let line = line?;
        let number = index + 1;
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("#vertices") {
            let n = rest.trim().parse().map_err(|e| Error::Parse { line: number, message: format!("vertex count: {e}") })?;
            if n_vertices.replace(n).is_some() {
                return Err(Error::Parse { line: number, message: "repeated #vertices header".into() });
            }
            continue;
        }
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse { line: number, message: format!("expected 3 tab-separated fields, found {}", fields.len()) });
        }
        let vertex = |s: &str| -> Result<usize> {
            s.trim().parse().map_err(|e| Error::Parse { line: number, message: format!("vertex id `{s}`: {e}") })
        };
        edges.push((vertex(fields[0])?, vertex(fields[1])?, parse_f64(fields[2], number)?));
    }
    let n_vertices = n_vertices.ok_or_else(|| Error::Format("edge list lacks a `#vertices N` header".into()))?;
    Ok(EdgeList { n_vertices, edges })
}

/// Writes each undirected edge once, `i < j`.
pub fn write_edge_list<W: Write>(graph: &WeightedGraph, mut out: W) -> Result<()> {
    writeln!(out, "#vertices {}", graph.n_vertices())?;
    for (i, j, w) in graph.edges() {
        writeln!(out, "{i}\t{j}\t{w}")?;
    }
    Ok(())
}

/// One real per line. Also used for signal files.
pub fn read_values<R: BufRead>(input: R) -> Result<Vec<f64>> {
    data_lines(input).map(|item| item.and_then(|(line, text)| parse_f64(&text, line))).collect()
}

pub fn write_values<W: Write>(values: &[f64], mut out: W) -> Result<()> {
    for v in values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_point_cloud<R: BufRead>(input: R) -> Result<PointCloud> {
    let mut dim = None;
    let mut coords = Vec::new();
    for item in data_lines(input) {
        let (line, text) = item?;
        let row = text.split(',').map(|field| parse_f64(field, line)).collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse { line, message: format!("expected {d} columns, found {}", row.len()) })
            }
            Some(_) => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| Error::Format("point cloud file has no points".into()))?;
    PointCloud::new(dim, coords)
}

pub fn write_point_cloud<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    for i in 0..cloud.len() {
        let row: Vec<String> = cloud.point(i).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
