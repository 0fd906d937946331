use thiserror::Error;

/// Errors raised by grid construction, reconstruction, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("point is (nearly) antipodal to the tangent frame origin (p·origin = {dot:.3e})")]
    AntipodalPoint { dot: f64 },

    #[error("degenerate spherical polygon: vertices {0} and {1} coincide")]
    DegeneratePolygon(usize, usize),

    #[error("degenerate arc: endpoints are {0:.3e} rad apart")]
    DegenerateArc(f64),

    #[error("quadrature with {0} points is not supported on arcs (use 1 or 2)")]
    UnsupportedQuadrature(usize),

    #[error("grid level {level} exceeds the supported maximum {max}")]
    LevelTooLarge { level: u32, max: u32 },

    #[error("cell {cell} is degenerate (area {area:.3e})")]
    DegenerateCell { cell: usize, area: f64 },

    #[error("invalid grid topology: {0}")]
    InvalidTopology(String),

    #[error("stencil of cell {cell} has {members} members but {required} are needed")]
    StencilTooSmall {
        cell: usize,
        members: usize,
        required: usize,
    },

    #[error("least-squares system of cell {cell} has effective rank {rank} < {required}")]
    RankDeficientStencil {
        cell: usize,
        rank: usize,
        required: usize,
    },

    #[error("velocity samples around edge {edge} have effective rank {rank} < 6")]
    RankDeficientSamples { edge: usize, rank: usize },

    #[error("non-finite value in {0}")]
    NonFiniteField(&'static str),

    #[error("maximum wind speed is zero or Courant number is not positive")]
    ZeroWind,

    #[error("exact solution is only available for solid-body rotation")]
    UnsupportedWind,

    #[error("reference field has zero norm")]
    ZeroReference,

    #[error("convergence rates need positive errors (got {0:e})")]
    NonPositiveError(f64),

    #[error("at least two levels are required for convergence rates")]
    TooFewLevels,

    #[error("grid file format error: {0}")]
    Format(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("level {level}, scheme {scheme}: {source}")]
    Context {
        level: u32,
        scheme: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
