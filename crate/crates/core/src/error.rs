use std::path::PathBuf;

use crate::mesh::PatchId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-positive density {0}")]
    NonPositiveDensity(f64),
    #[error("non-positive pressure {0}")]
    NonPositivePressure(f64),
    #[error("non-finite input to interpolation")]
    NonFiniteInput,
    #[error("stencil needs {needed} values, got {available}")]
    InsufficientStencil { needed: usize, available: usize },

    #[error("patch capacity exceeded: need {needed} free slots, {available} available")]
    CapacityExceeded { needed: usize, available: usize },
    #[error("patch {0} is not a leaf")]
    NotALeaf(PatchId),
    #[error("patch {0} is not active")]
    InactivePatch(PatchId),
    #[error("patch {0} has no children")]
    NoChildren(PatchId),
    #[error("patch {patch} is missing neighbor in direction {dir}")]
    MissingNeighbor { patch: PatchId, dir: usize },
    #[error("mesh dump parse error at line {line}: {msg}")]
    Dump { line: usize, msg: String },

    #[error("tasks {first} and {second} conflict on {footprint}")]
    ConflictDetected {
        first: usize,
        second: usize,
        footprint: String,
    },

    #[error(
        "solver blow-up at step {step}, stage {stage}, patch {patch}, node ({i}, {j}): {source}"
    )]
    SolverBlowup {
        step: usize,
        stage: usize,
        patch: PatchId,
        i: isize,
        j: isize,
        #[source]
        source: Box<Error>,
    },
    #[error("positivity failure in patch {patch} at node ({i}, {j}): {source}")]
    PatchState {
        patch: PatchId,
        i: isize,
        j: isize,
        #[source]
        source: Box<Error>,
    },
    #[error("mesh validity violated: {0}")]
    InvalidMesh(String),

    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that signal a non-physical state produced by the scheme.
    pub fn is_positivity(&self) -> bool {
        match self {
            Error::NonPositiveDensity(_) | Error::NonPositivePressure(_) => true,
            Error::PatchState { .. } | Error::SolverBlowup { .. } => true,
            _ => false,
        }
    }
}
