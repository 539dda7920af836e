use thiserror::Error;

/// Errors produced by field construction, signal generation, detection runs
/// and scenario parsing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate field state: squared norm is zero")]
    DegenerateFieldState,

    #[error("grid mismatch: fields live on different grids")]
    GridMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid cell index {index} for grid of {len} cells")]
    InvalidCellIndex { index: usize, len: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid process parameters: {0}")]
    InvalidProcessParams(String),

    #[error("matrix is not Hermitian: max |A - A^H| entry is {max_deviation:e}")]
    NotHermitian { max_deviation: f64 },

    #[error("ergodic window too short: window {window} s, need at least {required} s")]
    WindowTooShort { window: f64, required: f64 },

    #[error("cannot average an empty sample set")]
    EmptySamples,

    #[error("region must contain at least one cell")]
    EmptyRegion,

    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),

    #[error("detector regions must be disjoint (cell {cell} is claimed twice)")]
    OverlappingRegions { cell: usize },

    #[error("run too short: no clicks were recorded")]
    ZeroClicks,

    #[error("unknown detector id {0:?}")]
    UnknownDetector(String),

    #[error("basis is not orthonormal; offending Gram entries: {}",
            format_gram_entries(.entries))]
    NonOrthonormalBasis { entries: Vec<(usize, usize, f64)> },

    #[error("epsilon scan needs >= 2 values spanning >= one decade, got {0}")]
    InvalidEpsilonScan(String),

    #[error("scenario error: {0}")]
    Scenario(String),

    #[error("unknown preset {0:?} (available: {available})", available = crate::scenario::PRESET_NAMES.join(", "))]
    UnknownPreset(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_gram_entries(entries: &[(usize, usize, f64)]) -> String {
    entries
        .iter()
        .map(|(i, j, dev)| format!("G[{i}][{j}] off by {dev:.3e}"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
