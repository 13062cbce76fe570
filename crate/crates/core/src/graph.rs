//! Weighted graphs with vertex weights, point-cloud graph construction, and
//! the S-weighted averages and volumes every other module is built on.
//!
//! A graph is stored in CSR form with both directions of every edge, so
//! `W` is symmetric by construction. The degree `D_ii = Σ_j W_ij` is derived
//! from the edge weights; the vertex weights `S_ii` are chosen by a
//! [`VertexWeights`] mode. The Laplacian is `L = S⁻¹(D − W)`.

use std::collections::{BTreeMap, VecDeque};
use std::ops::Deref;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Relative tolerance when the same edge is listed in both directions.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// How the vertex weights `S_ii` are assigned.
#[derive(Clone, Debug, PartialEq)]
pub enum VertexWeights {
    /// `S_ii = 1`.
    Unit,
    /// `S_ii = D_ii`, which makes `L` the random-walk Laplacian.
    Degree,
    /// Caller-provided weights, one per vertex.
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct WeightedGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    degree: Vec<f64>,
    vertex_weights: Vec<f64>,
}

/// Builds a graph from an undirected edge list.
///
/// Each edge may be listed once in either direction or twice (once per
/// direction); in the latter case the two weights must agree to within
/// [`SYMMETRY_TOLERANCE`] relative. Zero-weight edges are dropped.
pub fn build_graph(
    n_vertices: usize,
    edges: &[(usize, usize, f64)],
    mode: VertexWeights,
) -> Result<WeightedGraph> {
    if n_vertices == 0 {
        return Err(Error::InvalidArgument("graph needs at least one vertex".into()));
    }
    if edges.is_empty() && n_vertices > 1 {
        return Err(Error::InvalidArgument("edge list is empty".into()));
    }

    // (min, max) -> (weight given as (min, max), weight given as (max, min))
    let mut pairs: BTreeMap<(usize, usize), (Option<f64>, Option<f64>)> = BTreeMap::new();
    for &(i, j, w) in edges {
        for v in [i, j] {
            if v >= n_vertices {
                return Err(Error::VertexOutOfRange { vertex: v, n: n_vertices });
            }
        }
        if i == j {
            return Err(Error::SelfLoop(i));
        }
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite weight on edge ({i}, {j})")));
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight { i, j, weight: w });
        }
        let entry = pairs.entry((i.min(j), i.max(j))).or_default();
        let slot = if i < j { &mut entry.0 } else { &mut entry.1 };
        if slot.is_some() {
            return Err(Error::DuplicateEdge(i, j));
        }
        *slot = Some(w);
    }

    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_vertices];
    for (&(i, j), &(forward, backward)) in &pairs {
        let w = match (forward, backward) {
            (Some(a), Some(b)) => {
                if (a - b).abs() > SYMMETRY_TOLERANCE * a.abs().max(b.abs()) {
                    return Err(Error::Asymmetric { i, j, forward: a, backward: b });
                }
                a
            }
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => unreachable!(),
        };
        if w > 0.0 {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
    }
    WeightedGraph::from_adjacency(adjacency, mode)
}

impl WeightedGraph {
    fn from_adjacency(mut adjacency: Vec<Vec<(usize, f64)>>, mode: VertexWeights) -> Result<Self> {
        let n = adjacency.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut degree = Vec::with_capacity(n);
        offsets.push(0);
        for row in &mut adjacency {
            row.sort_by_key(|&(j, _)| j);
            let mut d = 0.0;
            for &(j, w) in row.iter() {
                targets.push(j);
                weights.push(w);
                d += w;
            }
            degree.push(d);
            offsets.push(targets.len());
        }

        let vertex_weights = match mode {
            VertexWeights::Unit => vec![1.0; n],
            VertexWeights::Degree => degree.clone(),
            VertexWeights::Explicit(values) => {
                if values.len() != n {
                    return Err(Error::LengthMismatch { expected: n, found: values.len() });
                }
                values
            }
        };
        for (vertex, &weight) in vertex_weights.iter().enumerate() {
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::VertexWeight { vertex, weight });
            }
        }

        let graph = WeightedGraph { offsets, targets, weights, degree, vertex_weights };
        let components = graph.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(graph)
    }

    pub fn n_vertices(&self) -> usize {
        self.degree.len()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.targets.len() / 2
    }

    /// `S_ii`.
    pub fn vertex_weight(&self, i: usize) -> f64 {
        self.vertex_weights[i]
    }

    pub fn vertex_weights(&self) -> &[f64] {
        &self.vertex_weights
    }

    /// `D_ii = Σ_j W_ij`.
    pub fn degree(&self, i: usize) -> f64 {
        self.degree[i]
    }

    /// Neighbors of `i` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    /// `W_ij`, zero when there is no edge.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.targets[range.clone()].binary_search(&j) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    /// Undirected edges `(i, j, w)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_vertices())
            .flat_map(move |i| self.neighbors(i).filter(move |&(j, _)| j > i).map(move |(j, w)| (i, j, w)))
    }

    /// `Vol(G) = Σ_i S_ii`.
    pub fn total_volume(&self) -> f64 {
        self.vertex_weights.iter().sum()
    }

    /// `Vol(R) = Σ_{i∈R} S_ii`.
    pub fn volume(&self, region: &[usize]) -> Result<f64> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut vol = 0.0;
        for &i in region {
            vol += self.checked_weight(i)?;
        }
        Ok(vol)
    }

    /// `Ave{f|R} = Σ_{i∈R} S_ii f(i) / Σ_{i∈R} S_ii`.
    pub fn weighted_average(&self, signal: &[f64], region: &[usize]) -> Result<f64> {
        self.check_signal(signal)?;
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let (mut num, mut den) = (0.0, 0.0);
        for &i in region {
            let s = self.checked_weight(i)?;
            num += s * signal[i];
            den += s;
        }
        Ok(num / den)
    }

    pub fn check_signal(&self, signal: &[f64]) -> Result<()> {
        if signal.len() != self.n_vertices() {
            return Err(Error::LengthMismatch { expected: self.n_vertices(), found: signal.len() });
        }
        Ok(())
    }

    fn checked_weight(&self, i: usize) -> Result<f64> {
        self.vertex_weights
            .get(i)
            .copied()
            .ok_or(Error::VertexOutOfRange { vertex: i, n: self.n_vertices() })
    }

    fn component_count(&self) -> usize {
        let n = self.n_vertices();
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for (u, _) in self.neighbors(v) {
                    if !seen[u] {
                        seen[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        components
    }

    /// Dense `D − W`, row-major.
    pub fn dense_laplacian(&self) -> Vec<f64> {
        let n = self.n_vertices();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = self.degree[i];
            for (j, w) in self.neighbors(i) {
                m[i * n + j] -= w;
            }
        }
        m
    }

    /// Applies `L = S⁻¹(D − W)` to a vertex function.
    pub fn apply_laplacian(&self, f: &[f64]) -> Vec<f64> {
        (0..self.n_vertices())
            .map(|i| {
                let mut acc = self.degree[i] * f[i];
                for (j, w) in self.neighbors(i) {
                    acc -= w * f[j];
                }
                acc / self.vertex_weights[i]
            })
            .collect()
    }

    /// SHA-256 over the vertex weights and edge list, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n_vertices() as u64).to_le_bytes());
        for s in &self.vertex_weights {
            hasher.update(s.to_le_bytes());
        }
        for (i, j, w) in self.edges() {
            hasher.update((i as u64).to_le_bytes());
            hasher.update((j as u64).to_le_bytes());
            hasher.update(w.to_le_bytes());
        }
        hex::encode(hasher.finalize())
    }
}

/// Real values on the graph vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSignal(Vec<f64>);

impl GraphSignal {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("signal value at vertex {pos} is not finite")));
        }
        Ok(GraphSignal(values))
    }

    pub fn for_graph(graph: &WeightedGraph, values: Vec<f64>) -> Result<Self> {
        graph.check_signal(&values)?;
        Self::new(values)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for GraphSignal {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `n` points in `R^d`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidArgument(format!(
                "{} coordinates do not form points of dimension {dim}",
                coords.len()
            )));
        }
        if coords.len() / dim < 2 {
            return Err(Error::InvalidArgument("a point cloud needs at least two points".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("point coordinates must be finite".into()));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidArgument("point rows have differing dimensions".into()));
        }
        Self::new(dim, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Kernel bandwidth `ε` for point-cloud graphs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bandwidth {
    /// Mean over points of the squared distance to the k-th neighbor.
    MeanKthNeighbor,
    Fixed(f64),
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distances from every point to its `k` nearest neighbors, sorted
/// by (distance, index).
fn knn(cloud: &PointCloud, k: usize) -> Result<Vec<Vec<(usize, f64)>>> {
    let n = cloud.len();
    let mut out = Vec::with_capacity(n);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(n);
    for i in 0..n {
        row.clear();
        let p = cloud.point(i);
        for j in 0..n {
            if j != i {
                let d = squared_distance(p, cloud.point(j));
                if d == 0.0 {
                    return Err(Error::DuplicatePoints { first: i.min(j), second: i.max(j) });
                }
                row.push((j, d));
            }
        }
        let cmp = |a: &(usize, f64), b: &(usize, f64)| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0));
        row.select_nth_unstable_by(k - 1, cmp);
        let mut nearest = row[..k].to_vec();
        nearest.sort_by(cmp);
        out.push(nearest);
    }
    Ok(out)
}

fn knn_connected(neighbors: &[Vec<(usize, f64)>], k: usize) -> bool {
    let n = neighbors.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in neighbors.iter().enumerate() {
        for &(j, _) in &row[..k] {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                count += 1;
                stack.push(u);
            }
        }
    }
    count == n
}

/// Gaussian-kernel graph on the symmetrized k-nearest-neighbor graph:
/// `W_ij = exp(−‖x_i − x_j‖² / ε)`, with `S` in degree mode.
pub fn point_cloud_graph(cloud: &PointCloud, k: usize, bandwidth: Bandwidth) -> Result<WeightedGraph> {
    let n = cloud.len();
    if k < 2 || k >= n {
        return Err(Error::InvalidArgument(format!("k = {k} must satisfy 2 <= k < n = {n}")));
    }
    let neighbors = knn(cloud, k)?;
    if !knn_connected(&neighbors, k) {
        // Connectivity is monotone in k: bisect on (k, n - 1].
        let (mut lo, mut hi) = (k, n - 1);
        let full = knn(cloud, n - 1)?;
        let connecting_k = if knn_connected(&full, n - 1) {
            while hi - lo > 1 {
                let mid = (lo + hi) / 2;
                if knn_connected(&full, mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Some(hi)
        } else {
            None
        };
        return Err(Error::PointCloudDisconnected { k, connecting_k });
    }

    let eps = match bandwidth {
        Bandwidth::MeanKthNeighbor => neighbors.iter().map(|row| row[k - 1].1).sum::<f64>() / n as f64,
        Bandwidth::Fixed(eps) => eps,
    };
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("kernel bandwidth {eps} must be positive")));
    }

    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, row) in neighbors.iter().enumerate() {
        for &(j, d2) in row {
            pairs.insert((i.min(j), i.max(j)), d2);
        }
    }
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &d2) in &pairs {
        let w = (-d2 / eps).exp();
        if w > 0.0 {
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
    }
    WeightedGraph::from_adjacency(adjacency, VertexWeights::Degree)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p3(mode: VertexWeights) -> WeightedGraph {
        build_graph(3, &[(0, 1, 1.0), (1, 2, 1.0)], mode).unwrap()
    }

    #[test]
    fn path_unit_mode() {
        let g = p3(VertexWeights::Unit);
        assert_eq!((0..3).map(|i| g.degree(i)).collect::<Vec<_>>(), vec![1.0, 2.0, 1.0]);
        assert_eq!(g.vertex_weights(), &[1.0, 1.0, 1.0]);
        assert_eq!(g.weight(0, 1), g.weight(1, 0));
        assert_eq!(g.weight(0, 2), 0.0);
    }

    #[test]
    fn path_degree_mode() {
        let g = p3(VertexWeights::Degree);
        assert_eq!(g.vertex_weights(), &[1.0, 2.0, 1.0]);
        assert_eq!(g.volume(&[0, 1, 2]).unwrap(), 4.0);
    }

    #[test]
    fn rejects_bad_edges() {
        let disconnected = build_graph(3, &[(0, 1, 1.0)], VertexWeights::Unit);
        assert!(matches!(disconnected, Err(Error::Disconnected { components: 2 })));
        assert!(matches!(build_graph(2, &[(0, 0, 1.0), (0, 1, 1.0)], VertexWeights::Unit), Err(Error::SelfLoop(0))));
        assert!(matches!(build_graph(2, &[(0, 1, -1.0)], VertexWeights::Unit), Err(Error::NegativeWeight { .. })));
        assert!(matches!(
            build_graph(2, &[(0, 1, 1.0), (1, 0, 1.1)], VertexWeights::Unit),
            Err(Error::Asymmetric { .. })
        ));
        assert!(matches!(build_graph(2, &[(0, 5, 1.0)], VertexWeights::Unit), Err(Error::VertexOutOfRange { .. })));
        assert!(matches!(build_graph(2, &[], VertexWeights::Unit), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn accepts_both_directions_within_tolerance() {
        let g = build_graph(2, &[(0, 1, 1.0), (1, 0, 1.0 + 1e-12)], VertexWeights::Unit).unwrap();
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.weight(1, 0), 1.0);
    }

    #[test]
    fn explicit_weights_checked() {
        let bad = build_graph(2, &[(0, 1, 1.0)], VertexWeights::Explicit(vec![1.0, 0.0]));
        assert!(matches!(bad, Err(Error::VertexWeight { vertex: 1, .. })));
        let short = build_graph(2, &[(0, 1, 1.0)], VertexWeights::Explicit(vec![1.0]));
        assert!(matches!(short, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn averages_and_volumes() {
        let g = build_graph(3, &[(0, 1, 1.0), (1, 2, 1.0)], VertexWeights::Explicit(vec![1.0, 3.0, 2.0])).unwrap();
        let f = [4.0, 0.0, 7.0];
        assert_eq!(g.weighted_average(&f, &[0, 1]).unwrap(), 1.0);
        assert_eq!(g.weighted_average(&f, &[2]).unwrap(), 7.0);
        assert_eq!(g.weighted_average(&[2.5; 3], &[0, 2]).unwrap(), 2.5);
        assert!(matches!(g.weighted_average(&f, &[]), Err(Error::EmptyRegion)));
        assert!(matches!(g.volume(&[]), Err(Error::EmptyRegion)));
        assert_eq!(g.volume(&[0, 1]).unwrap() + g.volume(&[2]).unwrap(), g.total_volume());
    }

    #[test]
    fn collinear_three_points_complete() {
        let cloud = PointCloud::new(1, vec![0.0, 1.0, 2.0]).unwrap();
        let g = point_cloud_graph(&cloud, 2, Bandwidth::MeanKthNeighbor).unwrap();
        assert_eq!(g.n_edges(), 3);
        for (i, j, w) in g.edges() {
            assert!(w > 0.0 && w <= 1.0);
            assert_eq!(g.weight(j, i), w);
        }
        assert_eq!(g.vertex_weights()[1], g.degree(1));
    }

    #[test]
    fn duplicate_points_rejected() {
        let cloud = PointCloud::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            point_cloud_graph(&cloud, 2, Bandwidth::MeanKthNeighbor),
            Err(Error::DuplicatePoints { first: 0, second: 2 })
        ));
    }

    #[test]
    fn disconnected_cloud_reports_connecting_k() {
        // Two tight clusters of four points, far apart.
        let mut coords = Vec::new();
        for c in [0.0, 100.0] {
            for d in [0.0, 0.1, 0.2, 0.3] {
                coords.extend([c + d, 0.0]);
            }
        }
        let cloud = PointCloud::new(2, coords).unwrap();
        match point_cloud_graph(&cloud, 2, Bandwidth::MeanKthNeighbor) {
            Err(Error::PointCloudDisconnected { k: 2, connecting_k: Some(4) }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
