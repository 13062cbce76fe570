use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("negative weight {weight} on edge ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, weight: f64 },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("asymmetric edge weights: ({i}, {j}) = {forward} but ({j}, {i}) = {backward}")]
    Asymmetric {
        i: usize,
        j: usize,
        forward: f64,
        backward: f64,
    },

    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("non-positive vertex weight {weight} at vertex {vertex}")]
    VertexWeight { vertex: usize, weight: f64 },

    #[error("points {first} and {second} are identical")]
    DuplicatePoints { first: usize, second: usize },

    #[error(
        "k-nearest-neighbor graph with k = {k} is disconnected{}",
        match .connecting_k { Some(c) => format!("; smallest connecting k is {c}"), None => String::new() }
    )]
    PointCloudDisconnected {
        k: usize,
        connecting_k: Option<usize>,
    },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("empty region")]
    EmptyRegion,

    #[error("regions overlap")]
    OverlappingRegions,

    #[error("eigensolver failed: {0}")]
    EigenSolver(String),

    #[error("second eigenvalue {0:e} is not separated from zero")]
    ZeroFiedlerValue(f64),

    #[error("need at least {needed} eigenvalues, have {available}")]
    TooFewEigenvalues { needed: usize, available: usize },

    #[error("eigenvalue {index} is not simple (relative gap {gap:e}); higher moments need a gap of at least 1e-9")]
    EigenvalueMultiplicity { index: usize, gap: f64 },

    #[error("interpolation system for region {region} is ill-conditioned (condition estimate {condition:e})")]
    IllConditioned { region: usize, condition: f64 },

    #[error("interpolation failed at level {level}, region {region}: {source}")]
    Interpolation {
        level: usize,
        region: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("region {0} has no retained neighbors")]
    IsolatedRegion(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical pipeline, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::EigenSolver(_)
            | Error::ZeroFiedlerValue(_)
            | Error::EigenvalueMultiplicity { .. }
            | Error::IllConditioned { .. }
            | Error::IsolatedRegion(_) => true,
            Error::Interpolation { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// Short stable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Disconnected { .. } => "disconnected",
            Error::NegativeWeight { .. } => "negative_weight",
            Error::SelfLoop(_) => "self_loop",
            Error::Asymmetric { .. } => "asymmetric",
            Error::DuplicateEdge(..) => "duplicate_edge",
            Error::VertexOutOfRange { .. } => "vertex_out_of_range",
            Error::VertexWeight { .. } => "vertex_weight",
            Error::DuplicatePoints { .. } => "duplicate_points",
            Error::PointCloudDisconnected { .. } => "point_cloud_disconnected",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::EmptyRegion => "empty_region",
            Error::OverlappingRegions => "overlapping_regions",
            Error::EigenSolver(_) => "eigen_solver",
            Error::ZeroFiedlerValue(_) => "zero_fiedler_value",
            Error::TooFewEigenvalues { .. } => "too_few_eigenvalues",
            Error::EigenvalueMultiplicity { .. } => "eigenvalue_multiplicity",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::Interpolation { source, .. } => source.kind(),
            Error::IsolatedRegion(_) => "isolated_region",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Parse { .. } => "parse",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
