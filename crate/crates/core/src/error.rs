use thiserror::Error;

/// Errors produced anywhere in the detection pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TllError {
    #[error("point outside grid: ({x}, {y}) not in {width}x{height}")]
    PointOutsideGrid {
        x: f64,
        y: f64,
        width: usize,
        height: usize,
    },
    #[error("malformed grid file: {0}")]
    MalformedGrid(String),
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("zero-length topological line")]
    ZeroLengthLine,
    #[error("vertex outside image: ({x}, {y})")]
    VertexOutsideImage { x: f64, y: f64 },
    #[error("empty sequence")]
    EmptySequence,
    #[error("empty protocol: {0}")]
    EmptyProtocol(String),
    #[error("matrix too large for exhaustive search: {rows}x{cols}")]
    MatrixTooLarge { rows: usize, cols: usize },
    #[error("state space too large for exhaustive search: {0} configurations")]
    StateSpaceTooLarge(u128),
    #[error("infeasible scene: {0}")]
    InfeasibleScene(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, TllError>;
