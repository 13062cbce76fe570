//! Truncated generalized eigenbasis `(D − W)φ = λSφ`, the p-harmonic
//! embedding, and the Green's kernel it realizes as a dot product.
//!
//! The generalized problem is reduced to the symmetric matrix
//! `S^{-1/2}(D − W)S^{-1/2}` and solved densely; only the smallest
//! `n_eigs + 1` pairs are kept. Eigenvectors are S-orthonormal, `φ₀` is
//! exactly `1/√Vol(G)` and each other vector has its first non-negligible
//! component positive.

use std::io::{Read, Write};

use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;

/// Largest graph handed to the dense eigensolver.
pub const MAX_DENSE_VERTICES: usize = 16_384;

/// Default number of nontrivial eigenpairs: `min(N − 1, 300)`.
pub fn default_n_eigs(n_vertices: usize) -> usize {
    n_vertices.saturating_sub(1).min(300)
}

#[derive(Clone, Debug)]
pub struct SpectralBasis {
    n_vertices: usize,
    eigenvalues: Vec<f64>,
    /// Vertex-major, `n_vertices × (n_eigs + 1)`.
    vectors: Vec<f64>,
    p: f64,
}

/// Computes the `n_eigs + 1` smallest eigenpairs, including `(0, φ₀)`.
/// The exponent `p` starts at 2; see [`choose_p`].
pub fn compute_basis(graph: &WeightedGraph, n_eigs: usize) -> Result<SpectralBasis> {
    let n = graph.n_vertices();
    if n < 2 {
        return Err(Error::InvalidArgument("spectral basis needs at least two vertices".into()));
    }
    if n_eigs == 0 || n_eigs > n - 1 {
        return Err(Error::InvalidArgument(format!("n_eigs = {n_eigs} must be in 1..={}", n - 1)));
    }
    if n > MAX_DENSE_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "{n} vertices exceed the dense eigensolver limit of {MAX_DENSE_VERTICES}"
        )));
    }

    let lap = graph.dense_laplacian();
    let inv_sqrt_s: Vec<f64> = graph.vertex_weights().iter().map(|s| 1.0 / s.sqrt()).collect();
    let m = Mat::<f64>::from_fn(n, n, |i, j| lap[i * n + j] * inv_sqrt_s[i] * inv_sqrt_s[j]);
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolver(format!("{e:?}")))?;
    let values = evd.S().column_vector();
    let u = evd.U();

    let lambda_max = values[n - 1].abs().max(f64::MIN_POSITIVE);
    if values[1] <= 1e-10 * lambda_max {
        return Err(Error::ZeroFiedlerValue(values[1]));
    }

    let k = n_eigs + 1;
    let volume = graph.total_volume();
    let s = graph.vertex_weights();
    let phi0 = 1.0 / volume.sqrt();

    let mut eigenvalues = Vec::with_capacity(k);
    let mut vectors = vec![0.0; n * k];
    eigenvalues.push(0.0);
    for i in 0..n {
        vectors[i * k] = phi0;
    }
    let mut phi = vec![0.0; n];
    for col in 1..k {
        for i in 0..n {
            phi[i] = u[(i, col)] * inv_sqrt_s[i];
        }
        // Remove the rounding-level component along φ₀, then renormalize.
        let along: f64 = (0..n).map(|i| s[i] * phi[i] * phi0).sum();
        for v in phi.iter_mut() {
            *v -= along * phi0;
        }
        let norm = (0..n).map(|i| s[i] * phi[i] * phi[i]).sum::<f64>().sqrt();
        let scale = phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lead = phi.iter().find(|v| v.abs() > 1e-8 * scale).copied().unwrap_or(1.0);
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[i * k + col] = sign * phi[i] / norm;
        }
        eigenvalues.push(values[col]);
    }

    Ok(SpectralBasis { n_vertices: n, eigenvalues, vectors, p: 2.0 })
}

impl SpectralBasis {
    /// Assembles a basis from raw parts, e.g. a cache file. `vectors` is
    /// vertex-major with `eigenvalues.len()` columns.
    pub fn from_parts(n_vertices: usize, eigenvalues: Vec<f64>, vectors: Vec<f64>, p: f64) -> Result<Self> {
        if eigenvalues.len() < 2 || vectors.len() != n_vertices * eigenvalues.len() {
            return Err(Error::Format("eigenbasis dimensions are inconsistent".into()));
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) || eigenvalues[1] <= 0.0 {
            return Err(Error::Format("eigenvalues must be nondecreasing with λ₁ > 0".into()));
        }
        if p.is_nan() || p <= 0.0 {
            return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
        }
        Ok(SpectralBasis { n_vertices, eigenvalues, vectors, p })
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of nontrivial eigenpairs (`n_max`).
    pub fn n_eigs(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// `λ₀ = 0, λ₁, …, λ_{n_max}`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `φ_n(i)`.
    pub fn phi(&self, n: usize, i: usize) -> f64 {
        self.vectors[i * self.eigenvalues.len() + n]
    }

    /// `φ_n` as a vertex function.
    pub fn eigenvector(&self, n: usize) -> Vec<f64> {
        (0..self.n_vertices).map(|i| self.phi(n, i)).collect()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn set_p(&mut self, p: f64) -> Result<()> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::InvalidArgument(format!("p = {p} must be positive")));
        }
        self.p = p;
        Ok(())
    }

    /// Drops eigenpairs beyond `n_eigs`.
    pub fn truncated(&self, n_eigs: usize) -> Result<SpectralBasis> {
        if n_eigs == 0 || n_eigs > self.n_eigs() {
            return Err(Error::InvalidArgument(format!("cannot truncate to {n_eigs} eigenpairs")));
        }
        let (old, new) = (self.eigenvalues.len(), n_eigs + 1);
        let vectors = (0..self.n_vertices)
            .flat_map(|i| self.vectors[i * old..i * old + new].iter().copied())
            .collect();
        Ok(SpectralBasis {
            n_vertices: self.n_vertices,
            eigenvalues: self.eigenvalues[..new].to_vec(),
            vectors,
            p: self.p,
        })
    }

    /// Writes the binary cache format: a one-line text header followed by
    /// little-endian `f64` eigenvalues and vertex-major eigenvectors.
    pub fn write_cache<W: Write>(&self, graph_hash: &str, mut out: W) -> Result<()> {
        writeln!(
            out,
            "avgwave-eigenbasis v1 n={} n_eigs={} p={} graph={}",
            self.n_vertices,
            self.n_eigs(),
            self.p,
            graph_hash
        )?;
        for v in self.eigenvalues.iter().chain(&self.vectors) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads a cache written by [`write_cache`](Self::write_cache); returns
    /// the basis and the graph hash recorded in the header.
    pub fn read_cache<R: Read>(mut input: R) -> Result<(SpectralBasis, String)> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Format("missing eigenbasis header".into()))?;
        let header = std::str::from_utf8(&bytes[..newline]).map_err(|e| Error::Format(e.to_string()))?;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("avgwave-eigenbasis") || fields.next() != Some("v1") {
            return Err(Error::Format(format!("unsupported eigenbasis header '{header}'")));
        }
        let (mut n, mut n_eigs, mut p, mut graph) = (None, None, None, None);
        for field in fields {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("bad header field '{field}'")))?;
            let bad = |_| Error::Format(format!("bad value in '{field}'"));
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "n_eigs" => n_eigs = Some(value.parse::<usize>().map_err(|e| bad(e.to_string()))?),
                "p" => p = Some(value.parse::<f64>().map_err(|e| bad(e.to_string()))?),
                "graph" => graph = Some(value.to_string()),
                _ => {}
            }
        }
        let (Some(n), Some(n_eigs), Some(p), Some(graph)) = (n, n_eigs, p, graph) else {
            return Err(Error::Format("incomplete eigenbasis header".into()));
        };
        let k = n_eigs + 1;
        let body = &bytes[newline + 1..];
        if body.len() != 8 * k * (n + 1) {
            return Err(Error::Format(format!(
                "eigenbasis body has {} bytes, expected {}",
                body.len(),
                8 * k * (n + 1)
            )));
        }
        let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        let eigenvalues: Vec<f64> = values.by_ref().take(k).collect();
        let vectors: Vec<f64> = values.collect();
        Ok((SpectralBasis::from_parts(n, eigenvalues, vectors, p)?, graph))
    }
}

/// Minimum number of nonzero eigenvalues for [`estimate_dimension`].
pub const MIN_DIMENSION_EIGENVALUES: usize = 20;

/// Weyl-law dimension estimate from nonzero eigenvalues `λ₁, λ₂, …`:
/// `2 / slope` of the least-squares line through `(log n, log λ_n)` over
/// `n ∈ [n_max/4, n_max]`, clamped to `[1, 10]`.
pub fn estimate_dimension_from_eigenvalues(nonzero: &[f64]) -> Result<f64> {
    let n_max = nonzero.len();
    if n_max < MIN_DIMENSION_EIGENVALUES {
        return Err(Error::TooFewEigenvalues { needed: MIN_DIMENSION_EIGENVALUES, available: n_max });
    }
    let first = n_max.div_ceil(4).max(1);
    let points: Vec<(f64, f64)> = (first..=n_max)
        .filter(|&n| nonzero[n - 1] > 0.0)
        .map(|n| ((n as f64).ln(), nonzero[n - 1].ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::TooFewEigenvalues { needed: 2, available: points.len() });
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let slope = sxy / sxx;
    if slope.is_nan() || slope <= 0.0 {
        return Ok(10.0);
    }
    Ok((2.0 / slope).clamp(1.0, 10.0))
}

pub fn estimate_dimension(basis: &SpectralBasis) -> Result<f64> {
    estimate_dimension_from_eigenvalues(&basis.eigenvalues[1..])
}

/// Picks the embedding exponent: `user_p` when given, otherwise
/// `max(2, round(dim))`, falling back to 2 when too few eigenvalues are
/// available to estimate the dimension. The result is stored in the basis.
pub fn choose_p(basis: &mut SpectralBasis, user_p: Option<f64>) -> Result<f64> {
    let p = match user_p {
        Some(p) if !(p > 0.0 && p.is_finite()) => {
            return Err(Error::InvalidArgument(format!("p = {p} must be positive")))
        }
        Some(p) => p,
        None => match estimate_dimension(basis) {
            Ok(dim) => dim.round().max(2.0),
            Err(Error::TooFewEigenvalues { .. }) => 2.0,
            Err(e) => return Err(e),
        },
    };
    basis.set_p(p)?;
    Ok(p)
}

/// Vertex coordinates whose dot products give the interpolation kernel,
/// plus the eigenfunctions reproduced exactly by higher vanishing moments.
///
/// For the plain p-harmonic embedding coordinate `n` of vertex `i` is
/// `φ_n(i)/λ_n^{p/2}`, `n = 1…n_max`, and `moment_count` is zero.
#[derive(Clone, Debug)]
pub struct Embedding {
    n_vertices: usize,
    dim: usize,
    coords: Vec<f64>,
    moment_count: usize,
    moments: Vec<f64>,
    p: f64,
}

/// The p-harmonic embedding `𝓗(i) = (φ_n(i)/λ_n^{p/2})_{n=1…n_max}`.
pub fn embed(basis: &SpectralBasis) -> Embedding {
    let n = basis.n_vertices;
    let dim = basis.n_eigs();
    let half_p = basis.p / 2.0;
    let scales: Vec<f64> = basis.eigenvalues[1..].iter().map(|l| l.powf(-half_p)).collect();
    let mut coords = Vec::with_capacity(n * dim);
    for i in 0..n {
        for (k, scale) in scales.iter().enumerate() {
            coords.push(basis.phi(k + 1, i) * scale);
        }
    }
    Embedding { n_vertices: n, dim, coords, moment_count: 0, moments: Vec::new(), p: basis.p }
}

/// Kernel embedding for `moment_count` extra vanishing moments.
///
/// Eigenfunctions `φ₁…φ_q` are removed from the embedding and kept as
/// exactly reproduced functions; the remaining coordinates carry kernel
/// weight `λ_n^{-p/2} Π_{k≤q} (λ_n − λ_k)^{-p/(2q)}`, which for `q = 1` is
/// `1/(λ_n^{p/2}(λ_n − λ₁)^{p/2})`. With `q = 0` this is [`embed`].
pub fn higher_moment_kernel(basis: &SpectralBasis, moment_count: usize) -> Result<Embedding> {
    if moment_count == 0 {
        return Ok(embed(basis));
    }
    let q = moment_count;
    if q >= basis.n_eigs() {
        return Err(Error::TooFewEigenvalues { needed: q + 1, available: basis.n_eigs() });
    }
    let lambda = &basis.eigenvalues;
    let gap = (lambda[q + 1] - lambda[q]) / lambda[q + 1];
    if gap < 1e-9 {
        return Err(Error::EigenvalueMultiplicity { index: q, gap });
    }

    let n = basis.n_vertices;
    let dim = basis.n_eigs() - q;
    let p = basis.p;
    let scales: Vec<f64> = lambda[q + 1..]
        .iter()
        .map(|&l| {
            let mut log_weight = -(p / 2.0) * l.ln();
            for &excluded in &lambda[1..=q] {
                log_weight -= p / (2.0 * q as f64) * (l - excluded).ln();
            }
            (0.5 * log_weight).exp()
        })
        .collect();
    let mut coords = Vec::with_capacity(n * dim);
    let mut moments = Vec::with_capacity(n * q);
    for i in 0..n {
        for (k, scale) in scales.iter().enumerate() {
            coords.push(basis.phi(q + 1 + k, i) * scale);
        }
        for k in 1..=q {
            moments.push(basis.phi(k, i));
        }
    }
    Ok(Embedding { n_vertices: n, dim, coords, moment_count: q, moments, p })
}

/// S-weighted sums over a vertex set: volume, embedding, and moment
/// functions.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSum {
    pub volume: f64,
    pub embedding: Vec<f64>,
    pub moments: Vec<f64>,
}

impl RegionSum {
    pub fn zeros(dim: usize, moment_count: usize) -> Self {
        RegionSum { volume: 0.0, embedding: vec![0.0; dim], moments: vec![0.0; moment_count] }
    }

    pub fn add(&mut self, other: &RegionSum) {
        self.volume += other.volume;
        for (a, b) in self.embedding.iter_mut().zip(&other.embedding) {
            *a += b;
        }
        for (a, b) in self.moments.iter_mut().zip(&other.moments) {
            *a += b;
        }
    }
}

impl Embedding {
    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Number of kernel coordinates.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn moment_count(&self) -> usize {
        self.moment_count
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `𝓗(i)`.
    pub fn coords(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// `φ₁(i) … φ_q(i)` for the reproduced eigenfunctions.
    pub fn moment_values(&self, i: usize) -> &[f64] {
        &self.moments[i * self.moment_count..(i + 1) * self.moment_count]
    }

    /// Sums over `region` weighted by `S`.
    pub fn region_sum(&self, graph: &WeightedGraph, region: &[usize]) -> Result<RegionSum> {
        if region.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let mut sum = RegionSum::zeros(self.dim, self.moment_count);
        for &i in region {
            if i >= self.n_vertices {
                return Err(Error::VertexOutOfRange { vertex: i, n: self.n_vertices });
            }
            let s = graph.vertex_weight(i);
            sum.volume += s;
            for (acc, c) in sum.embedding.iter_mut().zip(self.coords(i)) {
                *acc += s * c;
            }
            for (acc, m) in sum.moments.iter_mut().zip(self.moment_values(i)) {
                *acc += s * m;
            }
        }
        Ok(sum)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `G(i, j) = 𝓗(i)·𝓗(j)`.
pub fn green_kernel(embedding: &Embedding, i: usize, j: usize) -> f64 {
    dot(embedding.coords(i), embedding.coords(j))
}

/// `Σ_{i∈A} Σ_{j∈B} S_ii S_jj G(i, j)`, evaluated as the dot product of
/// the two S-weighted region sums.
pub fn region_kernel_sum(
    embedding: &Embedding,
    graph: &WeightedGraph,
    region_a: &[usize],
    region_b: &[usize],
) -> Result<f64> {
    let a = embedding.region_sum(graph, region_a)?;
    let b = embedding.region_sum(graph, region_b)?;
    Ok(dot(&a.embedding, &b.embedding))
}
