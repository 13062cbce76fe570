#![allow(dead_code)]

use std::collections::BTreeMap;

use avgwave_core::graph::{build_graph, VertexWeights, WeightedGraph};
use avgwave_core::interpolate::SolveOptions;
use avgwave_core::partition::{build_tree, compute_neighbors, PartitionTree};
use avgwave_core::spectral::{compute_basis, default_n_eigs, embed, Embedding, SpectralBasis};
use avgwave_core::transform::WaveletTransform;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random spanning tree plus `extra` further edges, weights in (0.1, 1].
pub fn random_graph(n: usize, extra: usize, degree_weights: bool, seed: u64) -> WeightedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = BTreeMap::new();
    let weight = |rng: &mut ChaCha8Rng| 1.0 - 0.9 * rng.random::<f64>();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let w = weight(&mut rng);
        edges.insert((j, i), w);
    }
    let target = (n - 1 + extra).min(n * (n - 1) / 2);
    while edges.len() < target {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b {
            let w = weight(&mut rng);
            edges.insert((a.min(b), a.max(b)), w);
        }
    }
    let list: Vec<_> = edges.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    let mode = if degree_weights { VertexWeights::Degree } else { VertexWeights::Unit };
    build_graph(n, &list, mode).unwrap()
}

pub fn path_graph(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    build_graph(n, &edges, VertexWeights::Unit).unwrap()
}

pub struct Pipeline {
    pub basis: SpectralBasis,
    pub embedding: Embedding,
    pub tree: PartitionTree,
    pub transform: WaveletTransform,
}

pub fn pipeline(graph: &WeightedGraph, neighbor_order: usize, seed: u64) -> Pipeline {
    let basis = compute_basis(graph, default_n_eigs(graph.n_vertices())).unwrap();
    let embedding = embed(&basis);
    let mut tree = build_tree(graph, &embedding, None, seed).unwrap();
    compute_neighbors(&mut tree, graph, neighbor_order, 0.125).unwrap();
    let transform = WaveletTransform::new(&tree, graph, &embedding, &SolveOptions::default()).unwrap();
    Pipeline { basis, embedding, tree, transform }
}

pub fn uniform_signal(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
