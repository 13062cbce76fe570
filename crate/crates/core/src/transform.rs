//! Forward and inverse average-interpolating wavelet transforms.
//!
//! Averages `β` live on every tree node. Going down one level, the averages
//! of each parent and its retained neighbors fix an interpolant whose
//! averages over the children are the predictions `β̃`. The detail stored at
//! child `c` on level `l+1` is
//!
//! ```text
//! α_c = Vol(c) / √VolAv_{l+1} · (β_c − β̃_c)
//! ```
//!
//! so `Σ_c α_c = 0` under every parent. Children of a single-child parent
//! inherit the parent's average and carry `α = 0`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{GraphSignal, WeightedGraph};
use crate::interpolate::{LocalSystem, SolveOptions};
use crate::partition::{NodeId, PartitionTree};
use crate::spectral::{Embedding, RegionSum};

/// `β` for every tree node, indexed by node id.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragePyramid {
    pub beta: Vec<f64>,
}

impl AveragePyramid {
    /// Largest relative violation of `β_parent Vol(parent) = Σ β_c Vol(c)`.
    pub fn two_scale_residual(&self, tree: &PartitionTree) -> f64 {
        let mut worst = 0.0f64;
        for node in tree.nodes() {
            if node.children.is_empty() {
                continue;
            }
            let mut sum = 0.0;
            let mut scale = 0.0;
            for &c in &node.children {
                let child = tree.node(c);
                sum += self.beta[c] * child.volume;
                scale += (self.beta[c] * child.volume).abs();
            }
            let lhs = self.beta[node.id] * node.volume;
            let scale = scale.max(lhs.abs());
            if scale > 0.0 {
                worst = worst.max((lhs - sum).abs() / scale);
            }
        }
        worst
    }
}

/// Root average plus one detail coefficient per node. The root's slot in
/// `alpha` is unused and kept at zero.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletPyramid {
    pub root_beta: f64,
    pub alpha: Vec<f64>,
}

impl WaveletPyramid {
    pub fn zeros(tree: &PartitionTree, root_beta: f64) -> Self {
        WaveletPyramid { root_beta, alpha: vec![0.0; tree.n_nodes()] }
    }

    /// Largest `|Σ_c α_c|` under a parent relative to `Σ_c |α_c|`.
    pub fn zero_sum_residual(&self, tree: &PartitionTree) -> f64 {
        let mut worst = 0.0f64;
        for node in tree.nodes() {
            if node.children.is_empty() {
                continue;
            }
            let sum: f64 = node.children.iter().map(|&c| self.alpha[c]).sum();
            let scale: f64 = node.children.iter().map(|&c| self.alpha[c].abs()).sum();
            if scale > 0.0 {
                worst = worst.max(sum.abs() / scale);
            }
        }
        worst
    }

    fn check_shape(&self, tree: &PartitionTree) -> Result<()> {
        if self.alpha.len() != tree.n_nodes() {
            return Err(Error::LengthMismatch { expected: tree.n_nodes(), found: self.alpha.len() });
        }
        if !self.root_beta.is_finite() || self.alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidArgument("pyramid holds non-finite values".into()));
        }
        Ok(())
    }
}

pub fn analyze_averages(signal: &[f64], tree: &PartitionTree, graph: &WeightedGraph) -> Result<AveragePyramid> {
    graph.check_signal(signal)?;
    let beta = tree
        .nodes()
        .iter()
        .map(|node| graph.weighted_average(signal, &node.vertices))
        .collect::<Result<Vec<_>>>()?;
    Ok(AveragePyramid { beta })
}

/// Prediction rule for the children of one parent.
#[derive(Clone, Debug)]
struct Stencil {
    /// The parent first, then its retained neighbors.
    sources: Vec<NodeId>,
    /// Row-major `children × sources`.
    weights: Vec<f64>,
    condition: f64,
}

impl Stencil {
    fn predict(&self, beta: &[f64], out: &mut Vec<f64>) {
        let m = self.sources.len();
        let base = beta[self.sources[0]];
        let shifted: Vec<f64> = self.sources.iter().map(|&s| beta[s] - base).collect();
        out.clear();
        for row in self.weights.chunks(m) {
            out.push(base + row.iter().zip(&shifted).map(|(w, d)| w * d).sum::<f64>());
        }
    }
}

/// The transform for a fixed graph, tree, embedding and solve options.
/// Building it solves every local interpolation system once; forward,
/// inverse and refinement then only apply the stored stencils.
#[derive(Clone, Debug)]
pub struct WaveletTransform {
    tree: PartitionTree,
    /// Per node; `None` when the node has fewer than two children.
    stencils: Vec<Option<Stencil>>,
    /// `√VolAv_l / Vol(node)` per node.
    detail_scale: Vec<f64>,
}

/// S-weighted embedding sums of every node, accumulated bottom-up.
fn node_sums(tree: &PartitionTree, graph: &WeightedGraph, embedding: &Embedding) -> Result<Vec<RegionSum>> {
    let mut sums: Vec<Option<RegionSum>> = vec![None; tree.n_nodes()];
    for level in (0..=tree.l_max()).rev() {
        for &id in tree.level(level) {
            let node = tree.node(id);
            let sum = if node.children.is_empty() {
                embedding.region_sum(graph, &node.vertices)?
            } else {
                let mut acc = RegionSum::zeros(embedding.dim(), embedding.moment_count());
                for &c in &node.children {
                    acc.add(sums[c].as_ref().expect("children are summed first"));
                }
                acc
            };
            sums[id] = Some(sum);
        }
    }
    Ok(sums.into_iter().map(|s| s.expect("every node lies on a level")).collect())
}

impl WaveletTransform {
    pub fn new(
        tree: &PartitionTree,
        graph: &WeightedGraph,
        embedding: &Embedding,
        options: &SolveOptions,
    ) -> Result<Self> {
        let n = graph.n_vertices();
        if embedding.n_vertices() != n {
            return Err(Error::LengthMismatch { expected: n, found: embedding.n_vertices() });
        }
        if tree.node(tree.root()).vertices.len() != n {
            return Err(Error::LengthMismatch { expected: n, found: tree.node(tree.root()).vertices.len() });
        }
        if tree.neighbor_settings().is_none() {
            return Err(Error::InvalidArgument("neighbor lists have not been computed for this tree".into()));
        }
        let sums = node_sums(tree, graph, embedding)?;
        let mut stencils = vec![None; tree.n_nodes()];
        for node in tree.nodes() {
            if node.children.len() < 2 {
                continue;
            }
            let sources: Vec<NodeId> = node.neighbors.iter().map(|&(id, _)| id).collect();
            debug_assert_eq!(sources.first(), Some(&node.id));
            let source_sums: Vec<RegionSum> = sources.iter().map(|&s| sums[s].clone()).collect();
            let system = LocalSystem::new(&source_sums, embedding.moment_count(), options, node.id).map_err(|e| {
                Error::Interpolation { level: node.level, region: node.id, source: Box::new(e) }
            })?;
            let targets: Vec<RegionSum> = node.children.iter().map(|&c| sums[c].clone()).collect();
            let weights = system.stencil(&targets);
            stencils[node.id] = Some(Stencil { sources, weights, condition: system.condition() });
        }
        let detail_scale = tree
            .nodes()
            .iter()
            .map(|node| tree.level_volume_avg(node.level).sqrt() / node.volume)
            .collect();
        Ok(WaveletTransform { tree: tree.clone(), stencils, detail_scale })
    }

    pub fn tree(&self) -> &PartitionTree {
        &self.tree
    }

    /// Largest condition estimate among the local systems.
    pub fn max_condition(&self) -> f64 {
        self.stencils.iter().flatten().map(|s| s.condition).fold(0.0, f64::max)
    }

    /// `√VolAv_l / Vol(node)`, the factor turning `α` into an average change.
    pub fn detail_scale(&self, node: NodeId) -> f64 {
        self.detail_scale[node]
    }

    /// Predicted child averages of `parent` from the averages at its level.
    pub fn predict_children(&self, parent: NodeId, beta: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.stencils[parent] {
            Some(stencil) => stencil.predict(beta, &mut out),
            None => out.extend(self.tree.node(parent).children.iter().map(|_| beta[parent])),
        }
        out
    }

    pub fn forward_averages(&self, averages: &AveragePyramid) -> Result<WaveletPyramid> {
        if averages.beta.len() != self.tree.n_nodes() {
            return Err(Error::LengthMismatch { expected: self.tree.n_nodes(), found: averages.beta.len() });
        }
        let beta = &averages.beta;
        let mut pyramid = WaveletPyramid::zeros(&self.tree, beta[self.tree.root()]);
        let mut predicted = Vec::new();
        for node in self.tree.nodes() {
            let Some(stencil) = &self.stencils[node.id] else { continue };
            stencil.predict(beta, &mut predicted);
            for (&c, &p) in node.children.iter().zip(&predicted) {
                pyramid.alpha[c] = (beta[c] - p) / self.detail_scale[c];
            }
        }
        Ok(pyramid)
    }

    pub fn forward(&self, signal: &[f64], graph: &WeightedGraph) -> Result<WaveletPyramid> {
        self.forward_averages(&analyze_averages(signal, &self.tree, graph)?)
    }

    /// Rebuilds every node average top-down.
    pub fn inverse_averages(&self, pyramid: &WaveletPyramid) -> Result<AveragePyramid> {
        pyramid.check_shape(&self.tree)?;
        let mut beta = vec![0.0; self.tree.n_nodes()];
        beta[self.tree.root()] = pyramid.root_beta;
        self.refine(&mut beta, 0, Some(&pyramid.alpha));
        Ok(AveragePyramid { beta })
    }

    pub fn inverse(&self, pyramid: &WaveletPyramid) -> Result<GraphSignal> {
        let averages = self.inverse_averages(pyramid)?;
        Ok(self.leaf_values(&averages.beta))
    }

    /// Fills levels below `from_level` in `beta`, adding details if given.
    fn refine(&self, beta: &mut [f64], from_level: usize, alpha: Option<&[f64]>) {
        let mut predicted = Vec::new();
        for level in from_level..self.tree.l_max() {
            for &id in self.tree.level(level) {
                let children = &self.tree.node(id).children;
                match &self.stencils[id] {
                    Some(stencil) => stencil.predict(beta, &mut predicted),
                    None => {
                        predicted.clear();
                        predicted.resize(children.len(), beta[id]);
                    }
                }
                for (&c, &p) in children.iter().zip(&predicted) {
                    let detail = alpha.map_or(0.0, |a| a[c] * self.detail_scale[c]);
                    beta[c] = p + detail;
                }
            }
        }
    }

    fn leaf_values(&self, beta: &[f64]) -> GraphSignal {
        let leaf = self.tree.leaf_of_vertex();
        GraphSignal::new(leaf.iter().map(|&id| beta[id]).collect()).expect("refinement of finite values is finite")
    }

    /// Refines a given set of averages at `level` down to the leaves with
    /// no detail added.
    pub fn refine_level(&self, level: usize, averages: &[f64]) -> Result<GraphSignal> {
        if level > self.tree.l_max() {
            return Err(Error::InvalidArgument(format!("level {level} exceeds the tree depth {}", self.tree.l_max())));
        }
        let ids = self.tree.level(level);
        if averages.len() != ids.len() {
            return Err(Error::LengthMismatch { expected: ids.len(), found: averages.len() });
        }
        let mut beta = vec![0.0; self.tree.n_nodes()];
        for (&id, &a) in ids.iter().zip(averages) {
            beta[id] = a;
        }
        self.refine(&mut beta, level, None);
        Ok(self.leaf_values(&beta))
    }

    /// Unit average on `target`, zero on the rest of its level, refined
    /// to the leaves. The result is not rescaled.
    pub fn scaling_function(&self, target: NodeId) -> Result<GraphSignal> {
        if target >= self.tree.n_nodes() {
            return Err(Error::InvalidArgument(format!("node {target} does not exist")));
        }
        let level = self.tree.node(target).level;
        if level == self.tree.l_max() {
            return Err(Error::InvalidArgument(format!("node {target} is a leaf")));
        }
        let averages: Vec<f64> =
            self.tree.level(level).iter().map(|&id| if id == target { 1.0 } else { 0.0 }).collect();
        self.refine_level(level, &averages)
    }
}

pub fn forward(
    signal: &[f64],
    tree: &PartitionTree,
    graph: &WeightedGraph,
    embedding: &Embedding,
    options: &SolveOptions,
) -> Result<WaveletPyramid> {
    WaveletTransform::new(tree, graph, embedding, options)?.forward(signal, graph)
}

pub fn inverse(
    pyramid: &WaveletPyramid,
    tree: &PartitionTree,
    graph: &WeightedGraph,
    embedding: &Embedding,
    options: &SolveOptions,
) -> Result<GraphSignal> {
    pyramid.check_shape(tree)?;
    WaveletTransform::new(tree, graph, embedding, options)?.inverse(pyramid)
}

pub fn scaling_function(
    tree: &PartitionTree,
    target: NodeId,
    graph: &WeightedGraph,
    embedding: &Embedding,
    options: &SolveOptions,
) -> Result<GraphSignal> {
    WaveletTransform::new(tree, graph, embedding, options)?.scaling_function(target)
}

/// Scales values so the largest magnitude is one; all-zero input is left
/// unchanged.
pub fn normalize_max_abs(values: &[f64]) -> Vec<f64> {
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return values.to_vec();
    }
    values.iter().map(|v| v / peak).collect()
}

/// Provenance recorded in a pyramid file.
#[derive(Clone, Debug, PartialEq)]
pub struct PyramidHeader {
    pub graph_hash: String,
    pub tree_hash: String,
    pub p: f64,
    pub n_eigs: usize,
    pub moments: usize,
    pub ridge: Option<f64>,
}

const PYRAMID_MAGIC: &str = "#avgwave-pyramid v1";

/// Writes the header, `root<TAB>β`, then `id<TAB>α` for every non-root node.
pub fn write_pyramid<W: Write>(pyramid: &WaveletPyramid, header: &PyramidHeader, mut out: W) -> Result<()> {
    let ridge = header.ridge.map_or_else(|| "none".to_string(), |r| r.to_string());
    writeln!(
        out,
        "{PYRAMID_MAGIC} nodes={} graph={} tree={} p={} n_eigs={} moments={} ridge={}",
        pyramid.alpha.len(),
        header.graph_hash,
        header.tree_hash,
        header.p,
        header.n_eigs,
        header.moments,
        ridge
    )?;
    writeln!(out, "root\t{}", pyramid.root_beta)?;
    for (id, a) in pyramid.alpha.iter().enumerate().skip(1) {
        writeln!(out, "{id}\t{a}")?;
    }
    Ok(())
}

pub fn read_pyramid<R: BufRead>(input: R) -> Result<(WaveletPyramid, PyramidHeader)> {
    let mut lines = input.lines().enumerate();
    let parse_err = |line: usize, message: String| Error::Parse { line: line + 1, message };
    let (_, first) = lines.next().ok_or_else(|| parse_err(0, "empty pyramid file".into()))?;
    let first = first?;
    let rest = first
        .strip_prefix(PYRAMID_MAGIC)
        .ok_or_else(|| parse_err(0, "missing pyramid header".into()))?;
    let mut fields = std::collections::BTreeMap::new();
    for token in rest.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| parse_err(0, format!("bad header field `{token}`")))?;
        fields.insert(k, v);
    }
    let field = |k: &str| fields.get(k).copied().ok_or_else(|| parse_err(0, format!("header lacks `{k}`")));
    let number = |k: &str| -> Result<f64> {
        field(k)?.parse::<f64>().map_err(|e| parse_err(0, format!("header field `{k}`: {e}")))
    };
    let count = |k: &str| -> Result<usize> {
        field(k)?.parse::<usize>().map_err(|e| parse_err(0, format!("header field `{k}`: {e}")))
    };
    let nodes = count("nodes")?;
    let ridge = match field("ridge")? {
        "none" => None,
        _ => Some(number("ridge")?),
    };
    let header = PyramidHeader {
        graph_hash: field("graph")?.to_string(),
        tree_hash: field("tree")?.to_string(),
        p: number("p")?,
        n_eigs: count("n_eigs")?,
        moments: count("moments")?,
        ridge,
    };

    let mut root_beta = None;
    let mut alpha = vec![None; nodes];
    alpha[0] = Some(0.0);
    for (index, line) in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('\t').ok_or_else(|| parse_err(index, "expected `key<TAB>value`".into()))?;
        let value: f64 = value.trim().parse().map_err(|e| parse_err(index, format!("bad value: {e}")))?;
        if !value.is_finite() {
            return Err(parse_err(index, "non-finite value".into()));
        }
        if key == "root" {
            if root_beta.replace(value).is_some() {
                return Err(parse_err(index, "duplicate root line".into()));
            }
            continue;
        }
        let id: usize = key.parse().map_err(|e| parse_err(index, format!("bad node id: {e}")))?;
        if id == 0 || id >= nodes {
            return Err(parse_err(index, format!("node id {id} out of range")));
        }
        if alpha[id].replace(value).is_some() {
            return Err(parse_err(index, format!("duplicate node {id}")));
        }
    }
    let root_beta = root_beta.ok_or_else(|| Error::Format("pyramid lacks a root line".into()))?;
    let alpha = alpha
        .into_iter()
        .enumerate()
        .map(|(id, a)| a.ok_or_else(|| Error::Format(format!("pyramid lacks node {id}"))))
        .collect::<Result<Vec<_>>>()?;
    Ok((WaveletPyramid { root_beta, alpha }, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, VertexWeights};
    use crate::partition::{build_tree, compute_neighbors};
    use crate::spectral::{compute_basis, embed};

    fn interval(n: usize, order: usize) -> (WeightedGraph, Embedding, PartitionTree) {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        let g = build_graph(n, &edges, VertexWeights::Unit).unwrap();
        let emb = embed(&compute_basis(&g, n - 1).unwrap());
        let mut tree = build_tree(&g, &emb, None, 0).unwrap();
        compute_neighbors(&mut tree, &g, order, 0.125).unwrap();
        (g, emb, tree)
    }

    #[test]
    fn averages_of_simple_signals() {
        let (g, _, tree) = interval(16, 1);
        let signal: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let pyr = analyze_averages(&signal, &tree, &g).unwrap();
        assert_eq!(pyr.beta[0], 7.5);
        for (v, &leaf) in tree.leaf_of_vertex().iter().enumerate() {
            assert_eq!(pyr.beta[leaf], signal[v]);
        }
        assert!(pyr.two_scale_residual(&tree) < 1e-14);
    }

    #[test]
    fn round_trip_and_constants() {
        let (g, emb, tree) = interval(64, 1);
        let t = WaveletTransform::new(&tree, &g, &emb, &SolveOptions::default()).unwrap();
        let signal: Vec<f64> = (0..64).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let pyr = t.forward(&signal, &g).unwrap();
        let back = t.inverse(&pyr).unwrap();
        for (a, b) in back.iter().zip(&signal) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(pyr.zero_sum_residual(&tree) < 1e-8);

        let constant = t.forward(&vec![3.0; 64], &g).unwrap();
        assert_eq!(constant.root_beta, 3.0);
        assert!(constant.alpha.iter().all(|a| a.abs() <= 1e-10 * 3.0));
    }

    #[test]
    fn corrupted_pyramid_breaks_two_scale_relation() {
        let (g, emb, tree) = interval(32, 1);
        let t = WaveletTransform::new(&tree, &g, &emb, &SolveOptions::default()).unwrap();
        let mut pyr = WaveletPyramid::zeros(&tree, 1.0);
        assert!(t.inverse(&pyr).unwrap().iter().all(|&v| v == 1.0));
        let child = tree.node(0).children[0];
        pyr.alpha[child] = 1.0;
        let averages = t.inverse_averages(&pyr).unwrap();
        assert!(averages.two_scale_residual(&tree) > 1e-3);
    }

    #[test]
    fn scaling_functions_partition_unity_and_preserve_mass() {
        let (g, emb, tree) = interval(64, 1);
        let t = WaveletTransform::new(&tree, &g, &emb, &SolveOptions::default()).unwrap();
        let level = 3;
        let mut total = vec![0.0; 64];
        for &id in tree.level(level) {
            let phi = t.scaling_function(id).unwrap();
            for (acc, v) in total.iter_mut().zip(phi.iter()) {
                *acc += v;
            }
            let mass: f64 = phi.iter().sum::<f64>() / 64.0;
            assert!((mass - tree.node(id).volume / 64.0).abs() < 1e-10);
        }
        assert!(total.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let leaf = tree.level(tree.l_max())[0];
        assert!(t.scaling_function(leaf).is_err());
    }

    #[test]
    fn scaling_function_support_is_local() {
        let (g, emb, tree) = interval(128, 1);
        let t = WaveletTransform::new(&tree, &g, &emb, &SolveOptions::default()).unwrap();
        let target = tree.region_containing(3, 64).unwrap();
        let phi = t.scaling_function(target).unwrap();
        assert_eq!(phi[0], 0.0);
        assert_eq!(phi[127], 0.0);
    }

    #[test]
    fn missing_neighbors_rejected() {
        let (g, emb, _) = interval(16, 1);
        let tree = build_tree(&g, &emb, None, 0).unwrap();
        assert!(WaveletTransform::new(&tree, &g, &emb, &SolveOptions::default()).is_err());
    }

    #[test]
    fn pyramid_file_round_trip_is_bit_exact() {
        let (g, emb, tree) = interval(32, 1);
        let signal: Vec<f64> = (0..32).map(|i| (i as f64 * 0.7).cos() / 3.0).collect();
        let pyr = forward(&signal, &tree, &g, &emb, &SolveOptions::default()).unwrap();
        let header = PyramidHeader {
            graph_hash: g.content_hash(),
            tree_hash: tree.content_hash(),
            p: 2.0,
            n_eigs: 31,
            moments: 0,
            ridge: Some(1e-10),
        };
        let mut buf = Vec::new();
        write_pyramid(&pyr, &header, &mut buf).unwrap();
        let (back, back_header) = read_pyramid(buf.as_slice()).unwrap();
        assert_eq!(back_header, header);
        assert_eq!(back.root_beta.to_bits(), pyr.root_beta.to_bits());
        for (a, b) in back.alpha.iter().zip(&pyr.alpha) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let truncated: Vec<u8> = buf.iter().copied().take(buf.len() / 2).collect();
        let cut = String::from_utf8_lossy(&truncated);
        let cut = &cut[..cut.rfind('\n').unwrap() + 1];
        assert!(read_pyramid(cut.as_bytes()).is_err());
    }
}
