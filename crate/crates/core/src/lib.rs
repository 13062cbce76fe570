//! Average-interpolating wavelets on weighted graphs and point clouds.

pub mod applications;
pub mod error;
pub mod graph;
pub mod interpolate;
pub mod io;
pub mod partition;
pub mod spectral;
pub mod transform;

pub use error::{Error, Result};
pub use graph::{build_graph, point_cloud_graph, Bandwidth, GraphSignal, PointCloud, VertexWeights, WeightedGraph};
pub use interpolate::{
    assemble_system, evaluate_interpolant, predicted_child_averages, solve_interpolant, BorderedSystem, Interpolant,
    InterpolationProblem, SolveOptions,
};
pub use partition::{build_tree, compute_neighbors, NodeId, PartitionTree, RegionNode};
pub use spectral::{choose_p, compute_basis, embed, higher_moment_kernel, Embedding, RegionSum, SpectralBasis};
pub use transform::{
    analyze_averages, forward, inverse, read_pyramid, scaling_function, write_pyramid, AveragePyramid,
    PyramidHeader, WaveletPyramid, WaveletTransform,
};
pub use applications::{denoise, nrmse, regress, snr_db, SampleSet};
