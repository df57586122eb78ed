use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{context}: dimensions {left:?} and {right:?} are incompatible")]
    DimensionMismatch {
        context: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("{axis} index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        index: usize,
        bound: usize,
        axis: &'static str,
    },

    #[error("index set must be strictly increasing and duplicate-free")]
    InvalidIndexSet,

    #[error("seed parameters must be positive")]
    InvalidSeedParams,

    #[error("tiled seed requires even row weight (got {0})")]
    OddRowWeight(usize),

    #[error("matrix parse error: {0}")]
    Parse(String),

    #[error("pair not orthogonal: row {hx_row} of the X matrix has odd overlap with row {hz_row} of the Z matrix")]
    PairNotOrthogonal { hx_row: usize, hz_row: usize },

    #[error("matrices must share a column count (got {left} and {right})")]
    ColumnCountMismatch { left: usize, right: usize },

    #[error("no valid swap found after {attempts} attempts")]
    NoValidSwap { attempts: usize },

    #[error("invalid cross swap: {0}")]
    InvalidSwap(String),

    #[error("nothing to repair: the pair is already orthogonal")]
    NothingToRepair,

    #[error("locality bound exceeded: {0}")]
    LocalityBound(String),

    #[error("run aborted after {consecutive} consecutive rejected swaps ({completed} iterations completed)")]
    RunAborted {
        consecutive: usize,
        completed: usize,
    },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
