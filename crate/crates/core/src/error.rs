//! Crate-wide error type.

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while building a density-equalizing map.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("mesh has no faces")]
    EmptyMesh,

    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    FaceIndexOutOfRange {
        face: usize,
        index: usize,
        vertex_count: usize,
    },

    #[error("face {face} repeats a vertex")]
    RepeatedVertexInFace { face: usize },

    #[error("degenerate face {face}: area {area:e} is below {threshold:e}")]
    DegenerateFace {
        face: usize,
        area: f64,
        threshold: f64,
    },

    #[error("zero-area face {face} cannot be oriented")]
    ZeroAreaFace { face: usize },

    #[error("edge ({a}, {b}) borders {count} faces; meshes must be edge-manifold")]
    NonManifoldEdge { a: usize, b: usize, count: usize },

    #[error("edge ({a}, {b}) is traversed twice in the same direction; faces are not consistently oriented")]
    InconsistentOrientation { a: usize, b: usize },

    #[error("vertex {vertex} is not referenced by any face")]
    IsolatedVertex { vertex: usize },

    #[error(
        "mesh is not a disk: Euler characteristic {euler}, {boundary_loops} boundary loop(s), \
         {components} component(s), {nonmanifold_vertices} non-manifold vertex/vertices"
    )]
    NotADisk {
        euler: i64,
        boundary_loops: usize,
        components: usize,
        nonmanifold_vertices: usize,
    },

    #[error("boundary loop has only {count} vertices; at least 3 are required")]
    BoundaryTooShort { count: usize },

    #[error("boundary edge {edge} has zero length")]
    ZeroLengthBoundaryEdge { edge: usize },

    #[error("ill-conditioned corner at boundary position {position}: consecutive edges are opposite-collinear")]
    IllConditionedCorner { position: usize },

    #[error("total boundary curvature is zero; the curve cannot be closed into a convex polygon")]
    ZeroTotalCurvature,

    #[error("matrix dimensions {rows}x{cols} do not match vector length {len}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },

    #[error("triplet ({row}, {col}) is outside a {rows}x{cols} matrix")]
    TripletOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("matrix is not symmetric: max |A - A^T| = {deviation:e} exceeds {threshold:e}")]
    NotSymmetric { deviation: f64, threshold: f64 },

    #[error("matrix has a zero diagonal entry at row {row}")]
    ZeroDiagonal { row: usize },

    #[error(
        "{method} did not converge: relative residual {residual:e} after {iterations} iterations"
    )]
    SolverStalled {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("flattening produced {count} flipped face(s)")]
    FlippedFaces { count: usize },

    #[error(
        "flat curve does not match the mesh boundary: {got} pinned vertices for a loop of {expected}"
    )]
    BoundaryMismatch { expected: usize, got: usize },

    #[error(
        "gap spacing {spacing} is too coarse: only {ring_points} circle points (need at least 8)"
    )]
    GapSpacingTooCoarse { spacing: f64, ring_points: usize },

    #[error("sea triangulation failed: {msg}")]
    SeaTriangulation { msg: String },

    #[error("density is not strictly positive at iteration {iteration} (min {min:e})")]
    NonPositiveDensity { iteration: usize, min: f64 },

    #[error("population has {got} entries but the mesh has {expected} faces")]
    PopulationCount { expected: usize, got: usize },

    #[error("population entry {index} is not strictly positive ({value})")]
    NonPositivePopulation { index: usize, value: f64 },

    #[error("scale rule references region {id} but no face carries that label")]
    UnknownRegion { id: u64 },

    #[error("scale rule for region {region} has nonpositive multiplier {value}")]
    NonPositiveMultiplier { region: u64, value: f64 },

    #[error("vertex {vertex} has no provenance back to the input mesh")]
    MissingProvenance { vertex: usize },

    #[error("region labels have {got} entries but the mesh has {expected} faces")]
    RegionLabelCount { expected: usize, got: usize },

    #[error("remeshing produced an invalid mesh: {source}")]
    RemeshInvalid {
        #[source]
        source: Box<Error>,
    },

    #[error("map has no land faces to render")]
    SvgEmptyLand,

    /// A run produced a NaN or infinity where the report schema promises a
    /// finite number.
    #[error("run report contains non-finite numbers")]
    NonFiniteReport,
}

impl Error {
    /// Wraps an I/O failure with the path it concerned.
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// File-format error pinned to a 1-based line number.
    pub fn parse(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.display().to_string(),
            line,
            msg: msg.into(),
        }
    }
}
