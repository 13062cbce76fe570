//! Seeded synthetic datasets with benchmark signals.
//!
//! | kind           | points                                                   | signal            |
//! |----------------|----------------------------------------------------------|-------------------|
//! | `interval`     | `i/(N−1)` on a path graph, unit edges, `S = I`           | `i/(N−1)`         |
//! | `sphere`       | normalized Gaussian samples on the unit sphere           | `(5z³ − 3z)/2`    |
//! | `swiss_roll`   | `(t cos t, h, t sin t)`, `t ∈ [1.5π, 4.5π]`, `h ∈ [0, 21]` | `t`             |
//! | `s_manifold`   | `(sin t, y, sign(t)(cos t − 1))`, `t ∈ [−1.5π, 1.5π]`, `y ∈ [0, 2]` | `t`    |
//! | `planar_bulbs` | two unit disks at `x = ±2` joined by a corridor `|y| ≤ ¼` | `x`              |
//!
//! All surface samples are uniform with respect to area. The swiss roll
//! samples arc length uniformly and maps it back to `t` by bisection.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::graph::{build_graph, point_cloud_graph, Bandwidth, PointCloud, VertexWeights, WeightedGraph};

/// Nearest-neighbor count used for point-cloud datasets.
pub const DEFAULT_NEIGHBORS: usize = 10;

pub const SWISS_ROLL_T_MIN: f64 = 1.5 * std::f64::consts::PI;
pub const SWISS_ROLL_T_MAX: f64 = 4.5 * std::f64::consts::PI;
pub const SWISS_ROLL_HEIGHT: f64 = 21.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    Interval,
    SwissRoll,
    Sphere,
    SManifold,
    PlanarBulbs,
}

impl SynthKind {
    pub const ALL: [SynthKind; 5] =
        [SynthKind::Interval, SynthKind::SwissRoll, SynthKind::Sphere, SynthKind::SManifold, SynthKind::PlanarBulbs];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Interval => "interval",
            SynthKind::SwissRoll => "swiss_roll",
            SynthKind::Sphere => "sphere",
            SynthKind::SManifold => "s_manifold",
            SynthKind::PlanarBulbs => "planar_bulbs",
        }
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dataset `{s}`")))
    }
}

#[derive(Clone, Debug)]
pub struct SynthDataset {
    pub kind: SynthKind,
    pub graph: WeightedGraph,
    /// Vertex coordinates; the interval uses its 1-D positions.
    pub points: PointCloud,
    /// Intrinsic coordinates per point: `(t, h)` on the swiss roll, `(t, y)`
    /// on the S-manifold, the position on the interval, empty otherwise.
    pub latent: Vec<Vec<f64>>,
    pub signal: Vec<f64>,
}

/// Degree-3 Legendre polynomial, the zonal spherical harmonic up to scale.
pub fn legendre3(z: f64) -> f64 {
    (5.0 * z * z * z - 3.0 * z) / 2.0
}

/// Arc length of the spiral `r = t` from 0 to `t`.
pub fn spiral_arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

fn spiral_parameter(arc: f64) -> f64 {
    let (mut lo, mut hi) = (SWISS_ROLL_T_MIN, SWISS_ROLL_T_MAX);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if spiral_arc_length(mid) < arc {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn interval(n: usize) -> Result<SynthDataset> {
    if n < 2 {
        return Err(Error::InvalidArgument("an interval needs at least two vertices".into()));
    }
    let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, 1.0)).collect();
    let graph = build_graph(n, &edges, VertexWeights::Unit)?;
    let x: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    Ok(SynthDataset {
        kind: SynthKind::Interval,
        graph,
        points: PointCloud::new(1, x.clone())?,
        latent: x.iter().map(|&v| vec![v]).collect(),
        signal: x,
    })
}

/// Samples points and the benchmark signal without building a graph.
pub fn sample_points(kind: SynthKind, n: usize, seed: u64) -> Result<(PointCloud, Vec<Vec<f64>>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = Vec::new();
    let mut latent = Vec::new();
    let mut signal = Vec::with_capacity(n);
    let dim = match kind {
        SynthKind::Interval => {
            let d = interval(n)?;
            return Ok((d.points, d.latent, d.signal));
        }
        SynthKind::Sphere => {
            for _ in 0..n {
                let mut p: [f64; 3] = std::array::from_fn(|_| StandardNormal.sample(&mut rng));
                let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                p.iter_mut().for_each(|v| *v /= norm);
                coords.extend_from_slice(&p);
                signal.push(legendre3(p[2]));
            }
            3
        }
        SynthKind::SwissRoll => {
            let (a0, a1) = (spiral_arc_length(SWISS_ROLL_T_MIN), spiral_arc_length(SWISS_ROLL_T_MAX));
            for _ in 0..n {
                let t = spiral_parameter(rng.random_range(a0..a1));
                let h = rng.random_range(0.0..SWISS_ROLL_HEIGHT);
                coords.extend_from_slice(&[t * t.cos(), h, t * t.sin()]);
                latent.push(vec![t, h]);
                signal.push(t);
            }
            3
        }
        SynthKind::SManifold => {
            let half = 1.5 * std::f64::consts::PI;
            for _ in 0..n {
                let t = rng.random_range(-half..half);
                let y = rng.random_range(0.0..2.0);
                coords.extend_from_slice(&[t.sin(), y, t.signum() * (t.cos() - 1.0)]);
                latent.push(vec![t, y]);
                signal.push(t);
            }
            3
        }
        SynthKind::PlanarBulbs => {
            while signal.len() < n {
                let x = rng.random_range(-3.0..3.0);
                let y = rng.random_range(-1.0..1.0);
                let in_disk = |cx: f64| (x - cx) * (x - cx) + y * y <= 1.0;
                let in_corridor = x.abs() <= 2.0 && y.abs() <= 0.25;
                if in_disk(-2.0) || in_disk(2.0) || in_corridor {
                    coords.extend_from_slice(&[x, y]);
                    signal.push(x);
                }
            }
            2
        }
    };
    if latent.is_empty() {
        latent = vec![Vec::new(); n];
    }
    Ok((PointCloud::new(dim, coords)?, latent, signal))
}

/// Generates a dataset; point clouds become k-nearest-neighbor graphs.
pub fn synth(kind: SynthKind, n: usize, seed: u64, k: usize) -> Result<SynthDataset> {
    if kind == SynthKind::Interval {
        return interval(n);
    }
    if n <= k {
        return Err(Error::InvalidArgument(format!("{kind} needs more than {k} points, got {n}")));
    }
    let (points, latent, signal) = sample_points(kind, n, seed)?;
    let graph = point_cloud_graph(&points, k, Bandwidth::MeanKthNeighbor)?;
    Ok(SynthDataset { kind, graph, points, latent, signal })
}
