use std::path::PathBuf;

use thiserror::Error;

use crate::block::Channel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("file size mismatch: expected {expected} bytes, found {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("frame index {index} out of range (sequence has {count} frames)")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("{plane} sample at ({x}, {y}) has value {value}, above the {bit_depth}-bit range")]
    SampleOutOfRange {
        plane: Channel,
        x: usize,
        y: usize,
        value: u32,
        bit_depth: u8,
    },
    #[error("frame does not match the sequence geometry: {0}")]
    SpecMismatch(String),
    #[error("invalid video spec: {0}")]
    InvalidSpec(String),
    #[error("unsupported coding block size {0} (expected 16, 32 or 64)")]
    UnsupportedBlockSize(usize),
    #[error("block belongs to {block} but plane is {plane}")]
    ChannelMismatch { block: Channel, plane: Channel },
    #[error("mean of an empty block is undefined")]
    EmptyBlock,
    #[error("mean {mu} outside [0, {max}]")]
    MeanOutOfRange { mu: f64, max: f64 },
    #[error("invalid JND parameters: {0}")]
    InvalidParams(String),
    #[error("QP {0} outside [0, 51]")]
    QpOutOfRange(i32),
    #[error("quantisation step must be positive, got {0}")]
    NonPositiveQStep(f64),
    #[error("bad transform block shape {width}x{height}")]
    BadBlockShape { width: usize, height: usize },
    #[error("QP map has {map} entries but grid has {grid} luma blocks")]
    GridMapMismatch { map: usize, grid: usize },
    #[error("plane dimensions differ: {0}")]
    DimsMismatch(String),
    #[error("plane {width}x{height} smaller than the {window}x{window} SSIM window")]
    PlaneTooSmall {
        width: usize,
        height: usize,
        window: usize,
    },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Broad failure classes, each mapped to its own process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Data,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Io => 3,
            ErrorKind::Data => 4,
        }
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_)
            | Error::InvalidSpec(_)
            | Error::InvalidParams(_)
            | Error::UnsupportedBlockSize(_)
            | Error::QpOutOfRange(_)
            | Error::Json(_) => ErrorKind::Config,
            Error::FileNotFound(_) | Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Data,
        }
    }
}
