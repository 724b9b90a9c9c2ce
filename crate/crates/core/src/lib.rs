//! JND-based perceptual quantisation of luma and chroma coding blocks, with a
//! lightweight transform/quantisation simulator and quality metrics.

pub mod block;
pub mod codec_sim;
pub mod error;
pub mod jnd;
pub mod metrics;
pub mod pquant;
pub mod report;
pub mod synth;
pub mod yuv_io;

pub use block::{partition, BlockGrid, Channel, CodingBlock};
pub use codec_sim::{simulate_frame, SimResult};
pub use error::{Error, ErrorKind, Result};
pub use jnd::{chroma_weight, luma_weight, JndParams, JndWeights};
pub use metrics::{MetricsReport, SsimMap};
pub use pquant::{build_qp_map, QpMap, QpMode};
pub use yuv_io::{ChromaFormat, Frame, Plane, VideoSpec};
