//! Denoising by coefficient truncation, regression from sparse samples,
//! and quality metrics.

pub mod synth;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{GraphSignal, WeightedGraph};
use crate::interpolate::SolveOptions;
use crate::partition::PartitionTree;
use crate::spectral::Embedding;
use crate::transform::{WaveletPyramid, WaveletTransform};

/// `⌊5·l_max/9⌋`.
pub fn default_cutoff_level(l_max: usize) -> usize {
    l_max * 5 / 9
}

/// Zeroes every coefficient stored below a parent at level `≥ cutoff_level`.
pub fn truncate_levels(pyramid: &mut WaveletPyramid, tree: &PartitionTree, cutoff_level: usize) {
    for node in tree.nodes() {
        if node.level >= cutoff_level {
            for &c in &node.children {
                pyramid.alpha[c] = 0.0;
            }
        }
    }
}

pub fn denoise_with(
    transform: &WaveletTransform,
    graph: &WeightedGraph,
    signal: &[f64],
    cutoff_level: usize,
) -> Result<GraphSignal> {
    let tree = transform.tree();
    if cutoff_level > tree.l_max() {
        return Err(Error::InvalidArgument(format!(
            "cutoff level {cutoff_level} exceeds the tree depth {}",
            tree.l_max()
        )));
    }
    let mut pyramid = transform.forward(signal, graph)?;
    truncate_levels(&mut pyramid, tree, cutoff_level);
    transform.inverse(&pyramid)
}

pub fn denoise(
    signal: &[f64],
    tree: &PartitionTree,
    graph: &WeightedGraph,
    embedding: &Embedding,
    cutoff_level: usize,
    options: &SolveOptions,
) -> Result<GraphSignal> {
    let transform = WaveletTransform::new(tree, graph, embedding, options)?;
    denoise_with(&transform, graph, signal, cutoff_level)
}

/// Subtracts the mean of each parent's child coefficients so they sum to zero.
pub fn reconcile(pyramid: &mut WaveletPyramid, tree: &PartitionTree) {
    for node in tree.nodes() {
        if node.children.is_empty() {
            continue;
        }
        let mean = node.children.iter().map(|&c| pyramid.alpha[c]).sum::<f64>() / node.children.len() as f64;
        for &c in &node.children {
            pyramid.alpha[c] -= mean;
        }
    }
}

/// Hard thresholding: coefficients with `|α| < threshold` are zeroed, then
/// each parent's children are reconciled.
pub fn denoise_threshold(
    transform: &WaveletTransform,
    graph: &WeightedGraph,
    signal: &[f64],
    threshold: f64,
) -> Result<GraphSignal> {
    if threshold.is_nan() || threshold < 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be non-negative, got {threshold}")));
    }
    let mut pyramid = transform.forward(signal, graph)?;
    for a in pyramid.alpha.iter_mut() {
        if a.abs() < threshold {
            *a = 0.0;
        }
    }
    reconcile(&mut pyramid, transform.tree());
    transform.inverse(&pyramid)
}

/// Observed values at distinct vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    samples: Vec<(usize, f64)>,
}

impl SampleSet {
    pub fn new(samples: Vec<(usize, f64)>, n_vertices: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("regression needs at least one sample".into()));
        }
        let mut seen = vec![false; n_vertices];
        for &(v, y) in &samples {
            if v >= n_vertices {
                return Err(Error::VertexOutOfRange { vertex: v, n: n_vertices });
            }
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidArgument(format!("vertex {v} is sampled twice")));
            }
            if !y.is_finite() {
                return Err(Error::InvalidArgument(format!("sample at vertex {v} is not finite")));
            }
        }
        Ok(SampleSet { samples })
    }

    /// `count` distinct vertices drawn uniformly, observing `signal`.
    pub fn draw(signal: &[f64], count: usize, seed: u64) -> Result<Self> {
        if count > signal.len() {
            return Err(Error::InvalidArgument(format!("cannot draw {count} samples from {} vertices", signal.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, signal.len(), count).into_vec();
        picked.sort_unstable();
        SampleSet::new(picked.into_iter().map(|v| (v, signal[v])).collect(), signal.len())
    }

    pub fn samples(&self) -> &[(usize, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Estimates a signal from samples. Each region holding samples gets their
/// S-weighted mean as its average; details are formed only where the parent,
/// its interpolation neighbors and all of its children hold samples, then
/// reconciled to sum to zero.
pub fn regress_with(transform: &WaveletTransform, graph: &WeightedGraph, samples: &SampleSet) -> Result<GraphSignal> {
    let tree = transform.tree();
    let n = graph.n_vertices();
    let mut weighted = vec![0.0; n];
    let mut weight = vec![0.0; n];
    for &(v, y) in samples.samples() {
        if v >= n {
            return Err(Error::VertexOutOfRange { vertex: v, n });
        }
        weighted[v] = graph.vertex_weight(v) * y;
        weight[v] = graph.vertex_weight(v);
    }
    let mut estimate = vec![None; tree.n_nodes()];
    for node in tree.nodes() {
        let (mut num, mut den) = (0.0, 0.0);
        for &v in &node.vertices {
            num += weighted[v];
            den += weight[v];
        }
        if den > 0.0 {
            estimate[node.id] = Some(num / den);
        }
    }
    let root_beta = estimate[tree.root()].ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
    let beta: Vec<f64> = estimate.iter().map(|e| e.unwrap_or(0.0)).collect();
    let marked = |id: usize| estimate[id].is_some();

    let mut pyramid = WaveletPyramid::zeros(tree, root_beta);
    for node in tree.nodes() {
        if node.children.len() < 2 || !marked(node.id) {
            continue;
        }
        let sources_marked = node.neighbors.iter().all(|&(id, _)| marked(id));
        let children_marked = node.children.iter().all(|&c| marked(c));
        if !(sources_marked && children_marked) {
            continue;
        }
        let predicted = transform.predict_children(node.id, &beta);
        for (&c, p) in node.children.iter().zip(predicted) {
            pyramid.alpha[c] = (beta[c] - p) / transform.detail_scale(c);
        }
    }
    reconcile(&mut pyramid, tree);
    transform.inverse(&pyramid)
}

pub fn regress(
    samples: &SampleSet,
    tree: &PartitionTree,
    graph: &WeightedGraph,
    embedding: &Embedding,
    options: &SolveOptions,
) -> Result<GraphSignal> {
    let transform = WaveletTransform::new(tree, graph, embedding, options)?;
    regress_with(&transform, graph, samples)
}

/// `10·log₁₀(Σ ref² / Σ (ref − est)²)`; `+∞` when the two agree exactly.
pub fn snr_db(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch { expected: reference.len(), found: estimate.len() });
    }
    let power: f64 = reference.iter().map(|r| r * r).sum();
    let error: f64 = reference.iter().zip(estimate).map(|(r, e)| (r - e) * (r - e)).sum();
    if error == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (power / error).log10())
}

/// Root-mean-square error divided by the range of the reference.
pub fn nrmse(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::LengthMismatch { expected: reference.len(), found: estimate.len() });
    }
    if reference.is_empty() {
        return Err(Error::InvalidArgument("empty reference".into()));
    }
    let max = reference.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = reference.iter().copied().fold(f64::INFINITY, f64::min);
    if max == min {
        return Err(Error::InvalidArgument("reference is constant".into()));
    }
    let mse = reference.iter().zip(estimate).map(|(r, e)| (r - e) * (r - e)).sum::<f64>() / reference.len() as f64;
    Ok(mse.sqrt() / (max - min))
}

/// Adds Gaussian noise rescaled so the noisy signal has exactly the given SNR.
pub fn add_noise_at_snr(signal: &[f64], target_snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    let power: f64 = signal.iter().map(|v| v * v).sum();
    if power == 0.0 {
        return Err(Error::InvalidArgument("cannot set an SNR for a zero signal".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<f64> = (0..signal.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let noise_power: f64 = noise.iter().map(|v| v * v).sum();
    let scale = (power / noise_power / 10f64.powf(target_snr_db / 10.0)).sqrt();
    Ok(signal.iter().zip(&noise).map(|(s, e)| s + scale * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_cases() {
        let r = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(snr_db(&r, &r).unwrap(), f64::INFINITY);
        assert!(snr_db(&r, &[0.0; 4]).unwrap().abs() < 1e-12);
        let e: Vec<f64> = r.iter().map(|v| v + 0.1).collect();
        assert!((snr_db(&r, &e).unwrap() - 20.0).abs() < 1e-9);
        assert!(snr_db(&r, &[0.0; 3]).is_err());
    }

    #[test]
    fn nrmse_cases() {
        assert!((nrmse(&[0.0, 1.0], &[0.1, 0.9]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(nrmse(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert!((nrmse(&[0.0, 1.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(nrmse(&[2.0, 2.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn calibrated_noise_hits_target() {
        let s: Vec<f64> = (0..500).map(|i| (i as f64 * 0.1).sin()).collect();
        let noisy = add_noise_at_snr(&s, 1.24, 7).unwrap();
        assert!((snr_db(&s, &noisy).unwrap() - 1.24).abs() < 1e-9);
        assert_eq!(noisy, add_noise_at_snr(&s, 1.24, 7).unwrap());
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![], 3).is_err());
        assert!(SampleSet::new(vec![(3, 1.0)], 3).is_err());
        assert!(SampleSet::new(vec![(1, 1.0), (1, 2.0)], 3).is_err());
        let drawn = SampleSet::draw(&[0.0, 1.0, 2.0, 3.0, 4.0], 3, 1).unwrap();
        assert_eq!(drawn.len(), 3);
        assert!(drawn.samples().iter().all(|&(v, y)| y == v as f64));
    }

    #[test]
    fn default_cutoffs() {
        assert_eq!(default_cutoff_level(9), 5);
        assert_eq!(default_cutoff_level(10), 5);
        assert_eq!(default_cutoff_level(11), 6);
    }
}
