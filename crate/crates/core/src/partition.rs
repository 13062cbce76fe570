//! Hierarchical dyadic partition of the vertex set by recursive 2-means on
//! the spectral embedding, and same-level neighbor lists from cut sizes.
//!
//! Nodes are stored in an arena in level order. A region with at most two
//! vertices is not split before the last level; it gets a single child with
//! the same vertex set. Every region at level `l_max - 1` is split into
//! singletons, so the tree is not strictly binary at the leaves.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::Embedding;

pub type NodeId = usize;

/// Default fraction of the largest cut a neighbor must reach.
pub const DEFAULT_CUT_FRACTION: f64 = 0.125;

/// Points sampled when seeding 2-means with the farthest pair.
const SEED_SAMPLE: usize = 256;
const LLOYD_MAX_ITERATIONS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct RegionNode {
    pub id: NodeId,
    pub level: usize,
    /// Sorted ascending.
    pub vertices: Vec<usize>,
    pub volume: f64,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// Same-level neighbors as `(node, order)`, starting with `(id, 0)`,
    /// sorted by order then id.
    pub neighbors: Vec<(NodeId, usize)>,
}

#[derive(Clone, Debug)]
pub struct PartitionTree {
    nodes: Vec<RegionNode>,
    levels: Vec<Vec<NodeId>>,
    level_volume_avg: Vec<f64>,
    neighbor_settings: Option<(usize, f64)>,
}

/// `⌊log₂ N⌋`.
pub fn default_levels(n_vertices: usize) -> usize {
    (usize::BITS - 1 - n_vertices.max(1).leading_zeros()) as usize
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn centroid(points: &[&[f64]], members: &[bool], want: bool) -> Vec<f64> {
    let dim = points[0].len();
    let mut c = vec![0.0; dim];
    let mut count = 0usize;
    for (p, _) in points.iter().zip(members).filter(|(_, &m)| m == want) {
        for (acc, x) in c.iter_mut().zip(p.iter()) {
            *acc += x;
        }
        count += 1;
    }
    for v in &mut c {
        *v /= count as f64;
    }
    c
}

/// Splits `points` into two nonempty clusters with Lloyd's algorithm.
///
/// Seeding uses the farthest pair among a seeded sample of at most 256
/// points. Ties in assignment go to the first cluster, and the cluster
/// containing point 0 is returned first. Returns indices into `points`.
pub fn two_means(points: &[&[f64]], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let n = points.len();
    assert!(n >= 2, "two_means needs at least two points");

    let sample: Vec<usize> = if n <= SEED_SAMPLE {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = index::sample(&mut rng, n, SEED_SAMPLE).into_vec();
        s.sort_unstable();
        s
    };
    let (mut best, mut first, mut second) = (-1.0, sample[0], sample[1]);
    for (a, &i) in sample.iter().enumerate() {
        for &j in &sample[a + 1..] {
            let d = squared_distance(points[i], points[j]);
            if d > best {
                (best, first, second) = (d, i, j);
            }
        }
    }

    let mut in_a = vec![true; n];
    if best <= 0.0 {
        // All sampled points coincide; fall back to an index split.
        for flag in in_a.iter_mut().skip(n.div_ceil(2)) {
            *flag = false;
        }
    } else {
        let mut ca = points[first].to_vec();
        let mut cb = points[second].to_vec();
        for iteration in 0..LLOYD_MAX_ITERATIONS {
            let mut changed = iteration == 0;
            for (flag, p) in in_a.iter_mut().zip(points) {
                let a = squared_distance(p, &ca) <= squared_distance(p, &cb);
                if a != *flag {
                    changed = true;
                    *flag = a;
                }
            }
            // Refill an emptied cluster with the point farthest from the other centroid.
            let count_a = in_a.iter().filter(|&&a| a).count();
            if count_a == 0 || count_a == n {
                let (survivor, target) = if count_a == 0 { (&cb, true) } else { (&ca, false) };
                let far = (0..n)
                    .max_by(|&x, &y| {
                        squared_distance(points[x], survivor)
                            .total_cmp(&squared_distance(points[y], survivor))
                            .then(y.cmp(&x))
                    })
                    .unwrap();
                in_a[far] = target;
                changed = true;
            }
            if !changed {
                break;
            }
            ca = centroid(points, &in_a, true);
            cb = centroid(points, &in_a, false);
        }
    }

    let (mut a, mut b): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| in_a[i]);
    if !in_a[0] {
        std::mem::swap(&mut a, &mut b);
    }
    (a, b)
}

/// Total edge weight between two disjoint vertex sets.
pub fn cut_size(graph: &WeightedGraph, region_a: &[usize], region_b: &[usize]) -> Result<f64> {
    let n = graph.n_vertices();
    let mut side = vec![0u8; n];
    for &v in region_a {
        *side.get_mut(v).ok_or(Error::VertexOutOfRange { vertex: v, n })? = 1;
    }
    for &v in region_b {
        let slot = side.get_mut(v).ok_or(Error::VertexOutOfRange { vertex: v, n })?;
        if *slot == 1 {
            return Err(Error::OverlappingRegions);
        }
        *slot = 2;
    }
    let mut cut = 0.0;
    for &i in region_a {
        for (j, w) in graph.neighbors(i) {
            if side[j] == 2 {
                cut += w;
            }
        }
    }
    Ok(cut)
}

/// Builds the partition tree. `l_max` defaults to `⌊log₂ N⌋`.
pub fn build_tree(
    graph: &WeightedGraph,
    embedding: &Embedding,
    l_max: Option<usize>,
    seed: u64,
) -> Result<PartitionTree> {
    let n = graph.n_vertices();
    if embedding.n_vertices() != n {
        return Err(Error::LengthMismatch { expected: n, found: embedding.n_vertices() });
    }
    if n < 2 {
        return Err(Error::InvalidArgument("partitioning needs at least two vertices".into()));
    }
    let l_max = l_max.unwrap_or_else(|| default_levels(n));
    if l_max == 0 {
        return Err(Error::InvalidArgument("the tree needs at least one level below the root".into()));
    }

    let root_vertices: Vec<usize> = (0..n).collect();
    let mut nodes = vec![RegionNode {
        id: 0,
        level: 0,
        volume: graph.total_volume(),
        vertices: root_vertices,
        parent: None,
        children: Vec::new(),
        neighbors: Vec::new(),
    }];
    let mut levels = vec![vec![0]];

    for level in 0..l_max {
        let mut next = Vec::new();
        for &id in &levels[level] {
            let vertices = &nodes[id].vertices;
            let parts: Vec<Vec<usize>> = if level + 1 == l_max {
                vertices.iter().map(|&v| vec![v]).collect()
            } else if vertices.len() <= 2 {
                vec![vertices.clone()]
            } else {
                let points: Vec<&[f64]> = vertices.iter().map(|&v| embedding.coords(v)).collect();
                let (a, b) = two_means(&points, splitmix64(seed ^ splitmix64(id as u64)));
                vec![a.iter().map(|&k| vertices[k]).collect(), b.iter().map(|&k| vertices[k]).collect()]
            };
            for part in parts {
                let child = nodes.len();
                let volume = graph.volume(&part)?;
                nodes.push(RegionNode {
                    id: child,
                    level: level + 1,
                    vertices: part,
                    volume,
                    parent: Some(id),
                    children: Vec::new(),
                    neighbors: Vec::new(),
                });
                nodes[id].children.push(child);
                next.push(child);
            }
        }
        levels.push(next);
    }

    Ok(PartitionTree::from_nodes(nodes, levels))
}

/// Fills in same-level neighbor lists.
///
/// Candidates of a region are the regions at its level joined to it by a
/// positive cut; a candidate is retained when its cut reaches
/// `cut_fraction` times the largest candidate cut. Order-`q` neighbors are
/// reached by `q` hops through retained lists.
pub fn compute_neighbors(
    tree: &mut PartitionTree,
    graph: &WeightedGraph,
    neighbor_order: usize,
    cut_fraction: f64,
) -> Result<()> {
    if neighbor_order == 0 {
        return Err(Error::InvalidArgument("neighbor order must be at least 1".into()));
    }
    if !(0.0..=1.0).contains(&cut_fraction) {
        return Err(Error::InvalidArgument(format!("cut fraction {cut_fraction} is outside [0, 1]")));
    }
    let n = graph.n_vertices();
    for level in 0..tree.levels.len() {
        let ids = tree.levels[level].clone();
        let mut region_of = vec![0usize; n];
        for (k, &id) in ids.iter().enumerate() {
            for &v in &tree.nodes[id].vertices {
                region_of[v] = k;
            }
        }
        let mut cuts: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); ids.len()];
        for (i, j, w) in graph.edges() {
            let (a, b) = (region_of[i], region_of[j]);
            if a != b {
                *cuts[a].entry(b).or_insert(0.0) += w;
                *cuts[b].entry(a).or_insert(0.0) += w;
            }
        }
        let retained: Vec<Vec<usize>> = cuts
            .iter()
            .map(|c| {
                let largest = c.values().fold(0.0f64, |m, &v| m.max(v));
                c.iter().filter(|(_, &cut)| cut >= cut_fraction * largest).map(|(&b, _)| b).collect()
            })
            .collect();

        for (k, &id) in ids.iter().enumerate() {
            if retained[k].is_empty() && ids.len() > 1 {
                return Err(Error::IsolatedRegion(id));
            }
            let mut order_of: BTreeMap<usize, usize> = BTreeMap::new();
            order_of.insert(k, 0);
            let mut frontier = vec![k];
            for order in 1..=neighbor_order {
                let mut next = Vec::new();
                for &f in &frontier {
                    for &r in &retained[f] {
                        if let std::collections::btree_map::Entry::Vacant(e) = order_of.entry(r) {
                            e.insert(order);
                            next.push(r);
                        }
                    }
                }
                frontier = next;
            }
            let mut list: Vec<(NodeId, usize)> = order_of.into_iter().map(|(r, o)| (ids[r], o)).collect();
            list.sort_by_key(|&(node, order)| (order, node));
            tree.nodes[id].neighbors = list;
        }
    }
    tree.neighbor_settings = Some((neighbor_order, cut_fraction));
    Ok(())
}

impl PartitionTree {
    fn from_nodes(nodes: Vec<RegionNode>, levels: Vec<Vec<NodeId>>) -> Self {
        let level_volume_avg = levels
            .iter()
            .map(|ids| ids.iter().map(|&id| nodes[id].volume).sum::<f64>() / ids.len() as f64)
            .collect();
        PartitionTree { nodes, levels, level_volume_avg, neighbor_settings: None }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> &RegionNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[RegionNode] {
        &self.nodes
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn l_max(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &[NodeId] {
        &self.levels[l]
    }

    /// `VolAv_l`.
    pub fn level_volume_avg(&self, l: usize) -> f64 {
        self.level_volume_avg[l]
    }

    /// `(neighbor_order, cut_fraction)` once neighbors are computed.
    pub fn neighbor_settings(&self) -> Option<(usize, f64)> {
        self.neighbor_settings
    }

    /// Leaf node holding each vertex.
    pub fn leaf_of_vertex(&self) -> Vec<NodeId> {
        let n = self.nodes[0].vertices.len();
        let mut leaf = vec![0; n];
        for &id in &self.levels[self.l_max()] {
            for &v in &self.nodes[id].vertices {
                leaf[v] = id;
            }
        }
        leaf
    }

    /// Node at `level` containing `vertex`.
    pub fn region_containing(&self, level: usize, vertex: usize) -> Option<NodeId> {
        self.levels.get(level)?.iter().copied().find(|&id| self.nodes[id].vertices.binary_search(&vertex).is_ok())
    }

    /// Writes one tab-separated record per node:
    /// `id level parent children volume vertices neighbors`.
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        let (order, fraction) = match self.neighbor_settings {
            Some((o, f)) => (o.to_string(), f.to_string()),
            None => ("-".into(), "-".into()),
        };
        writeln!(
            out,
            "#avgwave-tree v1 nodes={} l_max={} neighbor_order={} cut_fraction={}",
            self.nodes.len(),
            self.l_max(),
            order,
            fraction
        )?;
        writeln!(out, "#id\tlevel\tparent\tchildren\tvolume\tvertices\tneighbors")?;
        let join = |items: &mut dyn Iterator<Item = String>| {
            let s: Vec<String> = items.collect();
            if s.is_empty() {
                "-".to_string()
            } else {
                s.join(",")
            }
        };
        for node in &self.nodes {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                node.id,
                node.level,
                node.parent.map_or("-".to_string(), |p| p.to_string()),
                join(&mut node.children.iter().map(|c| c.to_string())),
                node.volume,
                join(&mut node.vertices.iter().map(|v| v.to_string())),
                join(&mut node.neighbors.iter().map(|(id, o)| format!("{id}:{o}"))),
            )?;
        }
        Ok(())
    }

    pub fn dump_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_dump(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dump is ASCII")
    }

    /// SHA-256 of the dump, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.dump_string().as_bytes()))
    }

    /// Reads a dump written by [`write_dump`](Self::write_dump), checking it
    /// against `graph`.
    pub fn read_dump<R: BufRead>(input: R, graph: &WeightedGraph) -> Result<PartitionTree> {
        let mut nodes: Vec<RegionNode> = Vec::new();
        let mut settings = None;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line_no = lineno + 1;
            let perr = |message: String| Error::Parse { line: line_no, message };
            if let Some(header) = line.strip_prefix("#avgwave-tree") {
                let mut order = None;
                let mut fraction = None;
                for field in header.split_whitespace() {
                    match field.split_once('=') {
                        Some(("neighbor_order", v)) if v != "-" => {
                            order = Some(v.parse::<usize>().map_err(|e| perr(e.to_string()))?)
                        }
                        Some(("cut_fraction", v)) if v != "-" => {
                            fraction = Some(v.parse::<f64>().map_err(|e| perr(e.to_string()))?)
                        }
                        _ => {}
                    }
                }
                settings = order.zip(fraction);
                continue;
            }
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(perr(format!("expected 7 columns, found {}", cols.len())));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|e| perr(format!("'{s}': {e}")));
            let list = |s: &str| -> Result<Vec<usize>> {
                if s == "-" {
                    Ok(Vec::new())
                } else {
                    s.split(',').map(num).collect()
                }
            };
            let neighbors = if cols[6] == "-" {
                Vec::new()
            } else {
                cols[6]
                    .split(',')
                    .map(|pair| {
                        let (id, order) = pair.split_once(':').ok_or_else(|| perr(format!("bad neighbor '{pair}'")))?;
                        Ok((num(id)?, num(order)?))
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            let id = num(cols[0])?;
            if id != nodes.len() {
                return Err(perr(format!("node ids must be consecutive, found {id}")));
            }
            let vertices = list(cols[5])?;
            nodes.push(RegionNode {
                id,
                level: num(cols[1])?,
                parent: if cols[2] == "-" { None } else { Some(num(cols[2])?) },
                children: list(cols[3])?,
                volume: graph.volume(&vertices)?,
                vertices,
                neighbors,
            });
        }
        if nodes.is_empty() {
            return Err(Error::Format("tree dump has no nodes".into()));
        }
        let depth = nodes.iter().map(|n| n.level).max().unwrap_or(0);
        let mut levels = vec![Vec::new(); depth + 1];
        for node in &nodes {
            levels[node.level].push(node.id);
        }
        let mut tree = PartitionTree::from_nodes(nodes, levels);
        tree.neighbor_settings = settings;
        tree.validate(graph.n_vertices())?;
        Ok(tree)
    }

    /// Checks the structural invariants: each level partitions the vertex
    /// set, children partition their parent, and leaves are singletons.
    pub fn validate(&self, n_vertices: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Format(msg));
        if self.nodes[0].parent.is_some() || self.levels[0] != [0] {
            return bad("node 0 must be the only root".into());
        }
        for (l, ids) in self.levels.iter().enumerate() {
            let mut seen = vec![false; n_vertices];
            for &id in ids {
                for &v in &self.nodes[id].vertices {
                    if v >= n_vertices || std::mem::replace(&mut seen[v], true) {
                        return bad(format!("level {l} does not partition the vertex set"));
                    }
                }
            }
            if seen.iter().any(|s| !s) {
                return bad(format!("level {l} does not cover the vertex set"));
            }
        }
        for node in &self.nodes {
            if node.vertices.is_empty() || node.vertices.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("node {} has an empty or unsorted vertex list", node.id));
            }
            if node.level < self.l_max() {
                let mut union: Vec<usize> = Vec::new();
                for &c in &node.children {
                    let child = self.nodes.get(c).ok_or_else(|| Error::Format(format!("missing child {c}")))?;
                    if child.parent != Some(node.id) || child.level != node.level + 1 {
                        return bad(format!("node {c} is not a child of {}", node.id));
                    }
                    union.extend(&child.vertices);
                }
                union.sort_unstable();
                if union != node.vertices {
                    return bad(format!("children of node {} do not partition it", node.id));
                }
            } else if node.vertices.len() != 1 || !node.children.is_empty() {
                return bad(format!("leaf {} is not a singleton", node.id));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, VertexWeights};
    use crate::spectral::{compute_basis, embed};

    fn path(n: usize) -> WeightedGraph {
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
        build_graph(n, &edges, VertexWeights::Unit).unwrap()
    }

    fn path_tree(n: usize, order: usize) -> (WeightedGraph, PartitionTree) {
        let g = path(n);
        let emb = embed(&compute_basis(&g, n - 1).unwrap());
        let mut tree = build_tree(&g, &emb, None, 0).unwrap();
        compute_neighbors(&mut tree, &g, order, DEFAULT_CUT_FRACTION).unwrap();
        (g, tree)
    }

    #[test]
    fn levels_default() {
        assert_eq!(default_levels(8), 3);
        assert_eq!(default_levels(9), 3);
        assert_eq!(default_levels(1023), 9);
        assert_eq!(default_levels(1024), 10);
    }

    #[test]
    fn path8_tree() {
        let (g, tree) = path_tree(8, 1);
        assert_eq!(tree.l_max(), 3);
        let leaves: Vec<Vec<usize>> = tree.level(3).iter().map(|&id| tree.node(id).vertices.clone()).collect();
        assert_eq!(leaves.len(), 8);
        assert!(leaves.iter().all(|v| v.len() == 1));
        tree.validate(8).unwrap();
        for l in 0..=3 {
            let total: f64 = tree.level(l).iter().map(|&id| tree.node(id).volume).sum();
            assert_eq!(total, g.total_volume());
            assert_eq!(tree.level_volume_avg(l), total / tree.level(l).len() as f64);
        }
        // the path splits into contiguous halves
        let halves: Vec<Vec<usize>> = tree.level(1).iter().map(|&id| tree.node(id).vertices.clone()).collect();
        assert_eq!(halves, vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7]]);
    }

    #[test]
    fn small_regions_form_chains() {
        let g = path(5);
        let emb = embed(&compute_basis(&g, 4).unwrap());
        let tree = build_tree(&g, &emb, Some(4), 1).unwrap();
        tree.validate(5).unwrap();
        for node in tree.nodes() {
            if node.level < 3 && node.vertices.len() <= 2 {
                assert_eq!(node.children.len(), 1);
                assert_eq!(tree.node(node.children[0]).vertices, node.vertices);
            }
        }
    }

    #[test]
    fn two_means_basic_cases() {
        let a = [0.0, 0.0];
        let b = [1.0, 1.0];
        assert_eq!(two_means(&[&a, &b], 0), (vec![0], vec![1]));
        let pts: Vec<&[f64]> = vec![&b, &a, &b, &a];
        assert_eq!(two_means(&pts, 7), (vec![0, 2], vec![1, 3]));
        let same: Vec<&[f64]> = vec![&a; 5];
        let (x, y) = two_means(&same, 3);
        assert!(!x.is_empty() && !y.is_empty());
    }

    #[test]
    fn cut_sizes() {
        let g = path(3);
        assert_eq!(cut_size(&g, &[0], &[1, 2]).unwrap(), 1.0);
        assert_eq!(cut_size(&g, &[0], &[2]).unwrap(), 0.0);
        assert_eq!(cut_size(&g, &[1, 2], &[0]).unwrap(), cut_size(&g, &[0], &[1, 2]).unwrap());
        assert!(matches!(cut_size(&g, &[0, 1], &[1]), Err(Error::OverlappingRegions)));
    }

    #[test]
    fn interval_neighbor_counts() {
        for (order, expected) in [(1, 3), (2, 5)] {
            let (_, tree) = path_tree(64, order);
            for l in 2..tree.l_max() {
                let ids = tree.level(l);
                let interior = &ids[order..ids.len() - order];
                for &id in interior {
                    assert_eq!(tree.node(id).neighbors.len(), expected, "level {l} node {id}");
                }
                for &id in ids {
                    assert_eq!(tree.node(id).neighbors[0], (id, 0));
                }
            }
        }
    }

    #[test]
    fn zero_fraction_keeps_all_touching_regions() {
        // Star: centre 0 joined to 1..6 with growing weights.
        let edges: Vec<_> = (1..7).map(|i| (0, i, i as f64)).collect();
        let g = build_graph(7, &edges, VertexWeights::Unit).unwrap();
        let emb = embed(&compute_basis(&g, 6).unwrap());
        let mut tree = build_tree(&g, &emb, Some(2), 0).unwrap();
        compute_neighbors(&mut tree, &g, 1, 0.0).unwrap();
        let leaf0 = tree.region_containing(2, 0).unwrap();
        assert_eq!(tree.node(leaf0).neighbors.len(), 7);
        compute_neighbors(&mut tree, &g, 1, 1.0).unwrap();
        assert_eq!(tree.node(leaf0).neighbors.len(), 2);
    }

    #[test]
    fn dump_round_trip() {
        let (g, tree) = path_tree(20, 1);
        let text = tree.dump_string();
        let back = PartitionTree::read_dump(text.as_bytes(), &g).unwrap();
        assert_eq!(back.dump_string(), text);
        assert_eq!(back.neighbor_settings(), Some((1, DEFAULT_CUT_FRACTION)));
        let broken = text.replacen("\t0,1,", "\t1,", 1);
        assert!(PartitionTree::read_dump(broken.as_bytes(), &g).is_err());
    }
}
