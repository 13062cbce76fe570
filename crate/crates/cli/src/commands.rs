use std::path::{Path, PathBuf};

use avgwave_core::applications::{self, synth, SampleSet};
use avgwave_core::graph::{build_graph, point_cloud_graph, Bandwidth, PointCloud, VertexWeights, WeightedGraph};
use avgwave_core::interpolate::SolveOptions;
use avgwave_core::io;
use avgwave_core::partition::{build_tree, compute_neighbors, PartitionTree};
use avgwave_core::spectral::{choose_p, compute_basis, default_n_eigs, embed, higher_moment_kernel, Embedding, SpectralBasis};
use avgwave_core::transform::{normalize_max_abs, read_pyramid, write_pyramid, PyramidHeader, WaveletTransform};
use avgwave_core::{Error, Result};

use crate::outputs::{manifest_for, Outputs};
use crate::{
    Command, DenoiseArgs, ForwardArgs, InverseArgs, LaplacianArgs, PartitionArgs, RegressArgs, ScalingArgs, SolveArgs,
    SynthArgs,
};

const GRAPH_FILE: &str = "graph.tsv";
const WEIGHTS_FILE: &str = "vertex_weights.txt";
const BASIS_FILE: &str = "basis.bin";
const POINTS_FILE: &str = "points.csv";
const SIGNAL_FILE: &str = "signal.csv";
const TREE_FILE: &str = "tree.txt";

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Synth(args) => run_synth(args),
        Command::Laplacian(args) => run_laplacian(args),
        Command::Partition(args) => run_partition(args),
        Command::Forward(args) => run_forward(args),
        Command::Inverse(args) => run_inverse(args),
        Command::Scaling(args) => run_scaling(args),
        Command::Denoise(args) => run_denoise(args),
        Command::Regress(args) => run_regress(args),
    }
}

fn to_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let mut out = Outputs::new("synth", args.out.join("synth.manifest"));
    out.record("kind", args.kind);
    out.record("n", args.n);
    out.record("seed", args.seed);
    out.record("k", args.k);
    let data = synth::synth(args.kind, args.n, args.seed, args.k)?;
    out.add(args.out.join(GRAPH_FILE), to_bytes(|b| io::write_edge_list(&data.graph, b))?);
    out.add(args.out.join(WEIGHTS_FILE), to_bytes(|b| io::write_values(data.graph.vertex_weights(), b))?);
    out.add(args.out.join(POINTS_FILE), to_bytes(|b| io::write_point_cloud(&data.points, b))?);
    out.add(args.out.join(SIGNAL_FILE), to_bytes(|b| io::write_values(&data.signal, b))?);
    out.commit()
}

fn graph_from_files(edges: &[u8], weights: Option<&[u8]>, degree: bool) -> Result<WeightedGraph> {
    let list = io::read_edge_list(edges)?;
    let mode = match weights {
        Some(bytes) => VertexWeights::Explicit(io::read_values(bytes)?),
        None if degree => VertexWeights::Degree,
        None => VertexWeights::Unit,
    };
    build_graph(list.n_vertices, &list.edges, mode)
}

fn run_laplacian(args: &LaplacianArgs) -> Result<()> {
    let mut out = Outputs::new("laplacian", args.dir.join("laplacian.manifest"));
    let (graph, coords) = if let Some(points) = &args.points {
        let cloud = io::read_point_cloud(out.read_input(points)?.as_slice())?;
        out.record("k", args.k);
        out.record("bandwidth", "mean_squared_kth_neighbor");
        (point_cloud_graph(&cloud, args.k, Bandwidth::MeanKthNeighbor)?, Some(cloud))
    } else {
        let edges = out.read_input(args.edges.as_ref().expect("clap requires an input"))?;
        let weights = args.vertex_weights.as_ref().map(|p| out.read_input(p)).transpose()?;
        out.record("degree_weights", args.degree_weights);
        let graph = graph_from_files(&edges, weights.as_deref(), args.degree_weights)?;
        let coords = match &args.coords {
            Some(path) => Some(io::read_point_cloud(out.read_input(path)?.as_slice())?),
            None => None,
        };
        (graph, coords)
    };
    if let Some(cloud) = &coords {
        if cloud.len() != graph.n_vertices() {
            return Err(Error::LengthMismatch { expected: graph.n_vertices(), found: cloud.len() });
        }
    }

    // Everything downstream reads the graph back from these files, so the
    // basis is computed from the same round-tripped graph.
    let edge_bytes = to_bytes(|b| io::write_edge_list(&graph, b))?;
    let weight_bytes = to_bytes(|b| io::write_values(graph.vertex_weights(), b))?;
    let graph = graph_from_files(&edge_bytes, Some(&weight_bytes), false)?;

    let n_eigs = args.n_eigs.unwrap_or_else(|| default_n_eigs(graph.n_vertices()));
    let mut basis = compute_basis(&graph, n_eigs)?;
    let user_p = match args.p.as_str() {
        "auto" => None,
        text => Some(
            text.parse::<f64>()
                .map_err(|e| Error::InvalidArgument(format!("--p must be a number or `auto`: {e}")))?,
        ),
    };
    let p = choose_p(&mut basis, user_p)?;
    out.record("n_eigs", n_eigs);
    out.record("p", p);
    out.record("graph_hash", graph.content_hash());

    out.add(args.dir.join(GRAPH_FILE), edge_bytes);
    out.add(args.dir.join(WEIGHTS_FILE), weight_bytes);
    out.add(args.dir.join(BASIS_FILE), to_bytes(|b| basis.write_cache(&graph.content_hash(), b))?);
    if let Some(cloud) = &coords {
        out.add(args.dir.join(POINTS_FILE), to_bytes(|b| io::write_point_cloud(cloud, b))?);
    }
    out.commit()
}

/// Graph, basis and optional coordinates of a run directory.
struct RunDir {
    dir: PathBuf,
    graph: WeightedGraph,
    basis: SpectralBasis,
}

impl RunDir {
    fn load(dir: &Path, out: &mut Outputs) -> Result<Self> {
        let edges = out.read_input(&dir.join(GRAPH_FILE))?;
        let weights = out.read_input(&dir.join(WEIGHTS_FILE))?;
        let graph = graph_from_files(&edges, Some(&weights), false)?;
        let (basis, hash) = SpectralBasis::read_cache(out.read_input(&dir.join(BASIS_FILE))?.as_slice())?;
        if hash != graph.content_hash() {
            return Err(Error::Format(format!("{BASIS_FILE} was computed for a different graph")));
        }
        Ok(RunDir { dir: dir.to_path_buf(), graph, basis })
    }

    fn tree(&self, out: &mut Outputs) -> Result<PartitionTree> {
        let bytes = out.read_input(&self.dir.join(TREE_FILE))?;
        PartitionTree::read_dump(bytes.as_slice(), &self.graph)
    }

    fn coords(&self, out: &mut Outputs) -> Result<Option<PointCloud>> {
        let path = self.dir.join(POINTS_FILE);
        if !path.exists() {
            return Ok(None);
        }
        Ok(Some(io::read_point_cloud(out.read_input(&path)?.as_slice())?))
    }

    fn embedding(&self, moments: usize) -> Result<Embedding> {
        if moments == 0 {
            Ok(embed(&self.basis))
        } else {
            higher_moment_kernel(&self.basis, moments)
        }
    }

    fn signal(&self, path: &Path, out: &mut Outputs) -> Result<Vec<f64>> {
        let values = io::read_values(out.read_input(path)?.as_slice())?;
        self.graph.check_signal(&values)?;
        Ok(values)
    }
}

fn solve_options(args: &SolveArgs, out: &mut Outputs) -> SolveOptions {
    out.record("moments", args.moments);
    out.record("ridge", args.ridge.map_or_else(|| "none".to_string(), |r| r.to_string()));
    SolveOptions { ridge: args.ridge, ..SolveOptions::default() }
}

/// Loads the tree and builds the transform for the given solve flags.
fn transform(run: &RunDir, args: &SolveArgs, out: &mut Outputs) -> Result<(WaveletTransform, PartitionTree)> {
    let options = solve_options(args, out);
    let tree = run.tree(out)?;
    let embedding = run.embedding(args.moments)?;
    Ok((WaveletTransform::new(&tree, &run.graph, &embedding, &options)?, tree))
}

fn run_partition(args: &PartitionArgs) -> Result<()> {
    let mut out = Outputs::new("partition", args.dir.join("partition.manifest"));
    let run = RunDir::load(&args.dir, &mut out)?;
    out.record("levels", args.levels.map_or_else(|| "auto".to_string(), |l| l.to_string()));
    out.record("neighbor_order", args.neighbor_order);
    out.record("cut_fraction", args.cut_fraction);
    out.record("seed", args.seed);
    let embedding = embed(&run.basis);
    let mut tree = build_tree(&run.graph, &embedding, args.levels, args.seed)?;
    compute_neighbors(&mut tree, &run.graph, args.neighbor_order, args.cut_fraction)?;
    out.add(args.dir.join(TREE_FILE), tree.dump_string().into_bytes());
    out.commit()
}

fn pyramid_header(run: &RunDir, tree: &PartitionTree, solve: &SolveArgs) -> PyramidHeader {
    PyramidHeader {
        graph_hash: run.graph.content_hash(),
        tree_hash: tree.content_hash(),
        p: run.basis.p(),
        n_eigs: run.basis.n_eigs(),
        moments: solve.moments,
        ridge: solve.ridge,
    }
}

fn run_forward(args: &ForwardArgs) -> Result<()> {
    let mut out = Outputs::new("forward", manifest_for(&args.out));
    let run = RunDir::load(&args.dir, &mut out)?;
    let signal = run.signal(&args.signal, &mut out)?;
    let (t, tree) = transform(&run, &args.solve, &mut out)?;
    let pyramid = t.forward(&signal, &run.graph)?;
    let header = pyramid_header(&run, &tree, &args.solve);
    out.add(args.out.clone(), to_bytes(|b| write_pyramid(&pyramid, &header, b))?);
    out.commit()
}

fn run_inverse(args: &InverseArgs) -> Result<()> {
    let mut out = Outputs::new("inverse", manifest_for(&args.out));
    let run = RunDir::load(&args.dir, &mut out)?;
    let (pyramid, header) = read_pyramid(out.read_input(&args.pyramid)?.as_slice())?;
    let solve = SolveArgs { moments: header.moments, ridge: header.ridge };
    let (t, tree) = transform(&run, &solve, &mut out)?;
    let expected = pyramid_header(&run, &tree, &solve);
    if header.graph_hash != expected.graph_hash || header.tree_hash != expected.tree_hash {
        return Err(Error::Format("pyramid was computed for a different graph or tree".into()));
    }
    if header.p.to_bits() != expected.p.to_bits() || header.n_eigs != expected.n_eigs {
        return Err(Error::Format(format!(
            "pyramid used p={} n_eigs={}, the run directory has p={} n_eigs={}",
            header.p, header.n_eigs, expected.p, expected.n_eigs
        )));
    }
    let signal = t.inverse(&pyramid)?;
    out.add(args.out.clone(), to_bytes(|b| io::write_values(&signal, b))?);
    out.commit()
}

fn run_scaling(args: &ScalingArgs) -> Result<()> {
    let mut out = Outputs::new("scaling", manifest_for(&args.out));
    let run = RunDir::load(&args.dir, &mut out)?;
    out.record("node", args.node);
    out.record("raw", args.raw);
    let (t, _) = transform(&run, &args.solve, &mut out)?;
    let values = t.scaling_function(args.node)?;
    let values = if args.raw { values.to_vec() } else { normalize_max_abs(&values) };
    let coords = run.coords(&mut out)?;
    let mut csv = String::from("vertex");
    if let Some(c) = &coords {
        for d in 0..c.dim() {
            csv.push_str(&format!(",x{d}"));
        }
    }
    csv.push_str(",value\n");
    for (i, v) in values.iter().enumerate() {
        csv.push_str(&i.to_string());
        if let Some(c) = &coords {
            for x in c.point(i) {
                csv.push_str(&format!(",{x}"));
            }
        }
        csv.push_str(&format!(",{v}\n"));
    }
    out.add(args.out.clone(), csv.into_bytes());
    out.commit()
}

fn run_denoise(args: &DenoiseArgs) -> Result<()> {
    let mut out = Outputs::new("denoise", manifest_for(&args.out));
    let run = RunDir::load(&args.dir, &mut out)?;
    let signal = run.signal(&args.signal, &mut out)?;
    let (t, tree) = transform(&run, &args.solve, &mut out)?;
    let result = match args.threshold {
        Some(threshold) => {
            out.record("threshold", threshold);
            applications::denoise_threshold(&t, &run.graph, &signal, threshold)?
        }
        None => {
            let cutoff = args.cutoff.unwrap_or_else(|| applications::default_cutoff_level(tree.l_max()));
            out.record("cutoff", cutoff);
            applications::denoise_with(&t, &run.graph, &signal, cutoff)?
        }
    };
    out.add(args.out.clone(), to_bytes(|b| io::write_values(&result, b))?);
    out.commit()
}

fn parse_samples(bytes: &[u8], n_vertices: usize) -> Result<SampleSet> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Format(format!("samples are not UTF-8: {e}")))?;
    let mut samples = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: index + 1, message };
        let (v, y) = line.split_once(',').ok_or_else(|| parse_err("expected `vertex,value`".into()))?;
        let v: usize = v.trim().parse().map_err(|e| parse_err(format!("vertex id: {e}")))?;
        let y: f64 = y.trim().parse().map_err(|e| parse_err(format!("value: {e}")))?;
        samples.push((v, y));
    }
    SampleSet::new(samples, n_vertices)
}

fn run_regress(args: &RegressArgs) -> Result<()> {
    let mut out = Outputs::new("regress", manifest_for(&args.out));
    let run = RunDir::load(&args.dir, &mut out)?;
    let samples = parse_samples(&out.read_input(&args.samples)?, run.graph.n_vertices())?;
    out.record("samples", samples.len());
    let (t, _) = transform(&run, &args.solve, &mut out)?;
    let result = applications::regress_with(&t, &run.graph, &samples)?;
    out.add(args.out.clone(), to_bytes(|b| io::write_values(&result, b))?);
    out.commit()
}
