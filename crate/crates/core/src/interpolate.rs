//! Energy-minimizing average interpolation.
//!
//! Given regions `Ω_1…Ω_m` and prescribed averages `β_r`, the interpolant is
//!
//! ```text
//! π(i) = c₀ + Σ_q c₋q φ_q(i) + Σ_r c_r Σ_{j∈Ω_r} S_jj G(i, j)
//! ```
//!
//! with coefficients from the bordered system
//!
//! ```text
//! [ 0  Pᵗ ] [ c₀, c₋ ]   [ 0 ]
//! [ P  A  ] [ c      ] = [ b ]
//! ```
//!
//! where `A_rr' = Σ_{Ω_r}Σ_{Ω_r'} S S G`, the first column of `P` holds
//! `Vol(Ω_r)`, further columns hold `Σ_{Ω_r} S φ_q` for reproduced
//! eigenfunctions, and `b_r = β_r Vol(Ω_r)`.
//!
//! Internally each row and column `r` is divided by `Vol(Ω_r)`, so the
//! unknowns become `c_r Vol(Ω_r)` and `A` becomes the Gram matrix of
//! region-average embeddings. The system is then symmetrically equilibrated
//! and factored with Bunch–Kaufman pivoting. Right-hand sides are shifted by
//! `β_1` first, so equal averages give an exactly constant interpolant.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::spectral::{dot, Embedding, RegionSum};

/// Condition estimate above which a local system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Adds `ε·trace(A)/m` to the diagonal of `A` when set.
    pub ridge: Option<f64>,
    pub max_condition: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { ridge: None, max_condition: MAX_CONDITION }
    }
}

/// Regions (the region itself first, then its neighbors) and their
/// prescribed averages.
#[derive(Clone, Debug)]
pub struct InterpolationProblem {
    pub regions: Vec<Vec<usize>>,
    pub betas: Vec<f64>,
}

impl InterpolationProblem {
    pub fn new(regions: Vec<Vec<usize>>, betas: Vec<f64>) -> Result<Self> {
        if regions.is_empty() {
            return Err(Error::InvalidArgument("an interpolation problem needs at least one region".into()));
        }
        if regions.len() != betas.len() {
            return Err(Error::LengthMismatch { expected: regions.len(), found: betas.len() });
        }
        if betas.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidArgument("prescribed averages must be finite".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for region in &regions {
            if region.is_empty() {
                return Err(Error::EmptyRegion);
            }
            for &v in region {
                if !seen.insert(v) {
                    return Err(Error::OverlappingRegions);
                }
            }
        }
        Ok(InterpolationProblem { regions, betas })
    }

    fn sums(&self, graph: &WeightedGraph, embedding: &Embedding) -> Result<Vec<RegionSum>> {
        self.regions.iter().map(|r| embedding.region_sum(graph, r)).collect()
    }
}

/// Number of reproduced eigenfunctions usable with `m` regions: the
/// moment constraints force `c = 0` once there are as many of them as
/// regions.
fn effective_moments(moment_count: usize, m: usize) -> usize {
    moment_count.min(m - 1)
}

/// The bordered matrix (row-major) and right-hand side in the original
/// unscaled unknowns `[c₀, c₋₁…c₋q, c_1…c_m]`.
#[derive(Clone, Debug)]
pub struct BorderedSystem {
    pub size: usize,
    pub moment_count: usize,
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
}

pub fn assemble_system(
    problem: &InterpolationProblem,
    graph: &WeightedGraph,
    embedding: &Embedding,
) -> Result<BorderedSystem> {
    let sums = problem.sums(graph, embedding)?;
    let m = sums.len();
    let q = effective_moments(embedding.moment_count(), m);
    let border = 1 + q;
    let size = border + m;
    let mut matrix = vec![0.0; size * size];
    let mut rhs = vec![0.0; size];
    for (r, sr) in sums.iter().enumerate() {
        let row = border + r;
        let mut border_entries = vec![sr.volume];
        border_entries.extend_from_slice(&sr.moments[..q]);
        for (k, &v) in border_entries.iter().enumerate() {
            matrix[row * size + k] = v;
            matrix[k * size + row] = v;
        }
        for (r2, s2) in sums.iter().enumerate() {
            matrix[row * size + border + r2] = dot(&sr.embedding, &s2.embedding);
        }
        rhs[row] = problem.betas[r] * sr.volume;
    }
    Ok(BorderedSystem { size, moment_count: q, matrix, rhs })
}

/// Factored local system in volume-scaled unknowns.
pub(crate) struct LocalSystem {
    m: usize,
    border: usize,
    /// Region-average embeddings and moment values.
    averages: Vec<RegionSum>,
    equilibration: Vec<f64>,
    factor: faer::linalg::solvers::Lblt<f64>,
    condition: f64,
}

impl LocalSystem {
    /// `region` only labels the error.
    pub(crate) fn new(
        sums: &[RegionSum],
        moment_count: usize,
        options: &SolveOptions,
        region: usize,
    ) -> Result<Self> {
        let m = sums.len();
        let q = effective_moments(moment_count, m);
        let border = 1 + q;
        let size = border + m;
        let averages: Vec<RegionSum> = sums.iter().map(average_of).collect();

        let mut k = Mat::<f64>::zeros(size, size);
        for (r, ar) in averages.iter().enumerate() {
            let row = border + r;
            k[(row, 0)] = 1.0;
            k[(0, row)] = 1.0;
            for j in 0..q {
                k[(row, 1 + j)] = ar.moments[j];
                k[(1 + j, row)] = ar.moments[j];
            }
            for (r2, a2) in averages.iter().enumerate().skip(r) {
                let g = dot(&ar.embedding, &a2.embedding);
                k[(row, border + r2)] = g;
                k[(border + r2, row)] = g;
            }
        }
        if let Some(eps) = options.ridge {
            let trace: f64 = (0..m).map(|r| k[(border + r, border + r)]).sum();
            for r in 0..m {
                k[(border + r, border + r)] += eps * trace / m as f64;
            }
        }

        let equilibration: Vec<f64> = (0..size)
            .map(|i| {
                let largest = (0..size).fold(0.0f64, |acc, j| acc.max(k[(i, j)].abs()));
                if largest > 0.0 {
                    1.0 / largest.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let scaled = Mat::<f64>::from_fn(size, size, |i, j| equilibration[i] * k[(i, j)] * equilibration[j]);
        if (0..size).any(|i| (0..size).any(|j| !scaled[(i, j)].is_finite())) {
            return Err(Error::IllConditioned { region, condition: f64::INFINITY });
        }
        let singular = scaled
            .singular_values()
            .map_err(|e| Error::EigenSolver(format!("singular values: {e:?}")))?;
        let largest = singular.first().copied().unwrap_or(0.0);
        let smallest = singular.last().copied().unwrap_or(0.0);
        let condition = if smallest > 0.0 { largest / smallest } else { f64::INFINITY };
        if condition.is_nan() || condition > options.max_condition {
            return Err(Error::IllConditioned { region, condition });
        }
        let factor = scaled.lblt(Side::Lower);
        Ok(LocalSystem { m, border, averages, equilibration, factor, condition })
    }

    pub(crate) fn condition(&self) -> f64 {
        self.condition
    }

    fn size(&self) -> usize {
        self.border + self.m
    }

    /// Solves for several right-hand sides of prescribed averages at once.
    /// Columns of `betas` (m × k, column-major per column vector) map to
    /// columns of the result in scaled unknowns `[c₀, c₋, c_r Vol_r]`.
    fn solve_scaled(&self, rhs: Mat<f64>) -> Mat<f64> {
        let d = &self.equilibration;
        let scaled_rhs = Mat::<f64>::from_fn(rhs.nrows(), rhs.ncols(), |i, j| d[i] * rhs[(i, j)]);
        let y = self.factor.solve(scaled_rhs.as_ref());
        Mat::<f64>::from_fn(y.nrows(), y.ncols(), |i, j| d[i] * y[(i, j)])
    }

    /// Scaled solution for one set of averages, with the `β_1` shift.
    pub(crate) fn solve(&self, betas: &[f64]) -> Vec<f64> {
        let shift = betas[0];
        let rhs = Mat::<f64>::from_fn(self.size(), 1, |i, _| {
            if i < self.border {
                0.0
            } else {
                betas[i - self.border] - shift
            }
        });
        let y = self.solve_scaled(rhs);
        let mut out: Vec<f64> = (0..self.size()).map(|i| y[(i, 0)]).collect();
        out[0] += shift;
        out
    }

    /// Row vector turning scaled unknowns into the average over `target`.
    fn average_functional(&self, target: &RegionSum) -> Vec<f64> {
        let avg = average_of(target);
        let mut g = Vec::with_capacity(self.size());
        g.push(1.0);
        g.extend_from_slice(&avg.moments[..self.border - 1]);
        for ar in &self.averages {
            g.push(dot(&avg.embedding, &ar.embedding));
        }
        g
    }

    /// Linear map from shifted averages `β_r − β_1` to predicted target
    /// averages minus `β_1`, as a row-major `targets × m` matrix.
    pub(crate) fn stencil(&self, targets: &[RegionSum]) -> Vec<f64> {
        let size = self.size();
        let unit = Mat::<f64>::from_fn(size, self.m, |i, j| if i == self.border + j { 1.0 } else { 0.0 });
        let x = self.solve_scaled(unit);
        let mut out = Vec::with_capacity(targets.len() * self.m);
        for t in targets {
            let g = self.average_functional(t);
            for j in 0..self.m {
                out.push((0..size).map(|i| g[i] * x[(i, j)]).sum());
            }
        }
        out
    }
}

fn average_of(sum: &RegionSum) -> RegionSum {
    let inv = 1.0 / sum.volume;
    RegionSum {
        volume: sum.volume,
        embedding: sum.embedding.iter().map(|v| v * inv).collect(),
        moments: sum.moments.iter().map(|v| v * inv).collect(),
    }
}

/// A solved interpolant.
#[derive(Clone, Debug)]
pub struct Interpolant {
    pub c0: f64,
    /// `c₋₁ … c₋q` for the reproduced eigenfunctions.
    pub moment_coeffs: Vec<f64>,
    /// `c_r`, one per region.
    pub coeffs: Vec<f64>,
    /// `Vol(Ω_r)`.
    pub volumes: Vec<f64>,
    /// `Σ_r c_r Σ_{j∈Ω_r} S_jj 𝓗(j)`; `π(i) = c₀ + Σ c₋q φ_q(i) + 𝓗(i)·w`.
    pub kernel_weight: Vec<f64>,
    pub condition: f64,
}

pub fn solve_interpolant(
    problem: &InterpolationProblem,
    graph: &WeightedGraph,
    embedding: &Embedding,
    options: &SolveOptions,
) -> Result<Interpolant> {
    let sums = problem.sums(graph, embedding)?;
    let system = LocalSystem::new(&sums, embedding.moment_count(), options, 0)?;
    let y = system.solve(&problem.betas);
    let border = system.border;
    let scaled = &y[border..];
    let mut kernel_weight = vec![0.0; embedding.dim()];
    for (avg, &c) in system.averages.iter().zip(scaled) {
        for (w, e) in kernel_weight.iter_mut().zip(&avg.embedding) {
            *w += c * e;
        }
    }
    Ok(Interpolant {
        c0: y[0],
        moment_coeffs: y[1..border].to_vec(),
        coeffs: scaled.iter().zip(&sums).map(|(c, s)| c / s.volume).collect(),
        volumes: sums.iter().map(|s| s.volume).collect(),
        kernel_weight,
        condition: system.condition(),
    })
}

impl Interpolant {
    /// `π(i)`.
    pub fn value(&self, embedding: &Embedding, i: usize) -> f64 {
        let mut v = self.c0 + dot(embedding.coords(i), &self.kernel_weight);
        for (c, phi) in self.moment_coeffs.iter().zip(embedding.moment_values(i)) {
            v += c * phi;
        }
        v
    }

    /// `Ave{π|R}` from the S-weighted sums over `R`.
    pub fn average(&self, sum: &RegionSum) -> f64 {
        let mut v = self.c0 + dot(&sum.embedding, &self.kernel_weight) / sum.volume;
        for (c, m) in self.moment_coeffs.iter().zip(&sum.moments) {
            v += c * m / sum.volume;
        }
        v
    }

    /// `Σ_r c_r Vol(Ω_r)`, zero for a solved system.
    pub fn zero_sum_residual(&self) -> f64 {
        self.coeffs.iter().zip(&self.volumes).map(|(c, v)| c * v).sum()
    }
}

pub fn evaluate_interpolant(interpolant: &Interpolant, vertices: &[usize], embedding: &Embedding) -> Vec<f64> {
    vertices.iter().map(|&i| interpolant.value(embedding, i)).collect()
}

/// Predicted averages of `π` over the children of the problem's first
/// region; the children must partition it.
pub fn predicted_child_averages(
    interpolant: &Interpolant,
    problem: &InterpolationProblem,
    children: &[Vec<usize>],
    graph: &WeightedGraph,
    embedding: &Embedding,
) -> Result<Vec<f64>> {
    let mut union: Vec<usize> = children.iter().flatten().copied().collect();
    union.sort_unstable();
    let mut parent = problem.regions[0].clone();
    parent.sort_unstable();
    if union != parent {
        return Err(Error::InvalidArgument("children do not partition the parent region".into()));
    }
    if children.len() == 1 {
        return Ok(vec![problem.betas[0]]);
    }
    children
        .iter()
        .map(|c| Ok(interpolant.average(&embedding.region_sum(graph, c)?)))
        .collect()
}
