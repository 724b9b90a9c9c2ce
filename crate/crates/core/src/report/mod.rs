//! Command implementations behind the `pixel-paq` binary and their on-disk
//! outputs. Every command is a pure function of the input bytes and the
//! configuration: reports contain no timestamps, records are emitted in frame
//! and CB order, and floating totals are accumulated sequentially.

mod compare;

pub use compare::{cmd_compare, ComparisonSummary, ModeTotals, PairComparison};

use std::fmt::Write as _;
use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{partition, BlockGrid, Channel, DEFAULT_CB_SIZE};
use crate::codec_sim::{simulate_frame, SimResult, DEFAULT_DEADZONE_THETA};
use crate::error::{Error, Result};
use crate::jnd::{curve_table, CurveKind, JndParams};
use crate::metrics::{psnr_from_mse, report, Db, MetricsReport};
use crate::pquant::{build_qp_map, QpMap, QpMode, MAX_QP, MIN_QP};
use crate::yuv_io::{create_sequence, open_sequence, Frame, VideoSpec};

/// Number of frames decoded ahead and processed in parallel.
const FRAME_BATCH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub spec: VideoSpec,
    pub cb_size: usize,
    pub base_qp: i32,
    pub mode: QpMode,
    pub exact_weights: bool,
    /// Carries the chroma knee-scaling switch.
    pub params: JndParams,
    pub theta: f64,
    pub frames: Option<Range<usize>>,
    pub out_dir: PathBuf,
    pub emit_recon: bool,
    pub emit_ssim_maps: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, spec: VideoSpec, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input: input.into(),
            spec,
            cb_size: DEFAULT_CB_SIZE,
            base_qp: 22,
            mode: QpMode::PixelPaq,
            exact_weights: false,
            params: JndParams::default(),
            theta: DEFAULT_DEADZONE_THETA,
            frames: None,
            out_dir: out_dir.into(),
            emit_recon: false,
            emit_ssim_maps: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        check_base_qp(self.base_qp)?;
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::Config(format!(
                "dead-zone offset {} outside [0, 1)",
                self.theta
            )));
        }
        self.params.validate(self.spec.bit_depth)?;
        self.frame_range()?;
        partition(&self.spec, self.cb_size)?;
        Ok(())
    }

    /// Selected frames, defaulting to the whole sequence.
    pub fn frame_range(&self) -> Result<Range<usize>> {
        let all = 0..self.spec.frame_count;
        match &self.frames {
            None => Ok(all),
            Some(r) if r.start < r.end && r.end <= all.end => Ok(r.clone()),
            Some(r) => Err(Error::Config(format!(
                "frame range {}..{} not within 0..{}",
                r.start, r.end, all.end
            ))),
        }
    }

    fn header(&self) -> Result<RunHeader> {
        let r = self.frame_range()?;
        Ok(RunHeader {
            spec: self.spec,
            cb_size: self.cb_size,
            base_qp: self.base_qp,
            mode: self.mode,
            exact_weights: self.exact_weights,
            theta: self.theta,
            frames: [r.start, r.end],
            params: self.params,
        })
    }
}

fn check_base_qp(qp: i32) -> Result<()> {
    if (MIN_QP..=MAX_QP).contains(&qp) {
        Ok(())
    } else {
        Err(Error::QpOutOfRange(qp))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunHeader {
    pub spec: VideoSpec,
    pub cb_size: usize,
    pub base_qp: i32,
    pub mode: QpMode,
    pub exact_weights: bool,
    pub theta: f64,
    pub frames: [usize; 2],
    pub params: JndParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerChannel<T> {
    pub y: T,
    pub cb: T,
    pub cr: T,
}

impl<T: Copy> PerChannel<T> {
    pub fn from_fn(mut f: impl FnMut(Channel) -> T) -> Self {
        PerChannel {
            y: f(Channel::Y),
            cb: f(Channel::Cb),
            cr: f(Channel::Cr),
        }
    }

    pub fn get(&self, channel: Channel) -> T {
        match channel {
            Channel::Y => self.y,
            Channel::Cb => self.cb,
            Channel::Cr => self.cr,
        }
    }
}

/// Reads the selected frames in batches and maps `f` over each batch in
/// parallel, returning results in frame order.
pub(crate) fn map_frames<T: Send>(
    config: &RunConfig,
    f: impl Fn(usize, &Frame) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let range = config.frame_range()?;
    let mut source = open_sequence(&config.input, config.spec)?;
    let indices: Vec<usize> = range.collect();
    let mut out = Vec::with_capacity(indices.len());
    for batch in indices.chunks(FRAME_BATCH) {
        let frames = batch
            .iter()
            .map(|&i| source.read_frame(i).map(|fr| (i, fr)))
            .collect::<Result<Vec<_>>>()?;
        let results = frames
            .par_iter()
            .map(|(i, fr)| f(*i, fr))
            .collect::<Result<Vec<_>>>()?;
        out.extend(results);
    }
    Ok(out)
}

/// Builds the map for `mode` at `base_qp`, simulates the frame, and measures it.
pub fn process_frame(
    frame: &Frame,
    grid: &BlockGrid,
    config: &RunConfig,
    mode: QpMode,
    base_qp: i32,
    keep_maps: bool,
) -> Result<(QpMap, SimResult, MetricsReport)> {
    let map = build_qp_map(
        frame,
        grid,
        base_qp,
        mode,
        &config.params,
        config.exact_weights,
    )?;
    let sim = simulate_frame(frame, grid, &map, &map.thresholds(), config.theta)?;
    let metrics = report(frame, &sim.recon, config.spec.bit_depth, keep_maps)?;
    Ok((map, sim, metrics))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------- analyze

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CbRecord {
    pub index: usize,
    pub x: usize,
    pub y: usize,
    pub mu_y: f64,
    pub mu_cb: f64,
    pub mu_cr: f64,
    pub l_y: f64,
    pub w_cb: f64,
    pub w_cr: f64,
    pub pqp_y: i32,
    pub oqp_cb: i32,
    pub oqp_cr: i32,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrameQpMap {
    pub frame: usize,
    pub records: Vec<CbRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpMapFile {
    pub header: RunHeader,
    pub frames: Vec<FrameQpMap>,
}

pub const QPMAP_CSV_HEADER: &str =
    "frame,index,x,y,mu_y,mu_cb,mu_cr,l_y,w_cb,w_cr,pqp_y,oqp_cb,oqp_cr";

fn records(grid: &BlockGrid, map: &QpMap) -> Vec<CbRecord> {
    map.entries
        .iter()
        .zip(&grid.luma_blocks)
        .map(|(e, b)| CbRecord {
            index: e.luma_index,
            x: b.x,
            y: b.y,
            mu_y: e.mu_y,
            mu_cb: e.mu_cb,
            mu_cr: e.mu_cr,
            l_y: e.l_y,
            w_cb: e.w_cb,
            w_cr: e.w_cr,
            pqp_y: e.pqp_y,
            oqp_cb: e.oqp_cb,
            oqp_cr: e.oqp_cr,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct AnalyzeOutput {
    pub json: PathBuf,
    pub csv: PathBuf,
    pub qp_map: QpMapFile,
}

/// Writes the per-CB QP map of every selected frame as `qpmap.json` and `qpmap.csv`.
pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeOutput> {
    config.validate()?;
    let grid = partition(&config.spec, config.cb_size)?;
    let frames = map_frames(config, |i, frame| {
        let map = build_qp_map(
            frame,
            &grid,
            config.base_qp,
            config.mode,
            &config.params,
            config.exact_weights,
        )?;
        Ok(FrameQpMap {
            frame: i,
            records: records(&grid, &map),
        })
    })?;
    let qp_map = QpMapFile {
        header: config.header()?,
        frames,
    };

    let mut csv = String::from(QPMAP_CSV_HEADER);
    csv.push('\n');
    for f in &qp_map.frames {
        for r in &f.records {
            writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                f.frame,
                r.index,
                r.x,
                r.y,
                r.mu_y,
                r.mu_cb,
                r.mu_cr,
                r.l_y,
                r.w_cb,
                r.w_cr,
                r.pqp_y,
                r.oqp_cb,
                r.oqp_cr
            )
            .expect("write to string");
        }
    }

    fs::create_dir_all(&config.out_dir)?;
    let json = config.out_dir.join("qpmap.json");
    let csv_path = config.out_dir.join("qpmap.csv");
    write_json(&json, &qp_map)?;
    fs::write(&csv_path, csv)?;
    log::info!(
        "analyze: {} frames, {} CBs per frame -> {}",
        qp_map.frames.len(),
        grid.len(),
        json.display()
    );
    Ok(AnalyzeOutput {
        json,
        csv: csv_path,
        qp_map,
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitTotals {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
    pub chroma: f64,
    pub total: f64,
}

impl BitTotals {
    fn from_sim(sim: &SimResult) -> Self {
        let (y, cb, cr) = (
            sim.bits(Channel::Y),
            sim.bits(Channel::Cb),
            sim.bits(Channel::Cr),
        );
        BitTotals {
            y,
            cb,
            cr,
            chroma: cb + cr,
            total: y + cb + cr,
        }
    }

    fn sum<'a>(items: impl IntoIterator<Item = &'a BitTotals>) -> Self {
        let mut acc = BitTotals {
            y: 0.0,
            cb: 0.0,
            cr: 0.0,
            chroma: 0.0,
            total: 0.0,
        };
        for b in items {
            acc.y += b.y;
            acc.cb += b.cb;
            acc.cr += b.cr;
            acc.chroma += b.chroma;
            acc.total += b.total;
        }
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassRates {
    pub y: f64,
    pub cb: f64,
    pub cr: f64,
    pub all: f64,
}

/// Per-frame outcome of one (mode, QP) simulation, without the pixel data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameStats {
    pub frame: usize,
    pub bits: BitTotals,
    pub psnr: PerChannel<Db>,
    pub ssim: PerChannel<f64>,
    pub mse: PerChannel<f64>,
    pub jnd_pass_rate: PassRates,
    /// CB counts used to pool pass rates across frames.
    pub cb_count: usize,
    pub pass_count: PerChannel<usize>,
    pub pass_count_all: usize,
}

impl FrameStats {
    pub fn new(frame: usize, sim: &SimResult, metrics: &MetricsReport) -> Self {
        let pass_count = PerChannel::from_fn(|c| sim.jnd_pass.iter().filter(|p| p.get(c)).count());
        FrameStats {
            frame,
            bits: BitTotals::from_sim(sim),
            psnr: PerChannel::from_fn(|c| metrics.psnr(c)),
            ssim: PerChannel::from_fn(|c| metrics.ssim(c)),
            mse: PerChannel::from_fn(|c| metrics.mse(c)),
            jnd_pass_rate: PassRates {
                y: sim.pass_rate(Channel::Y),
                cb: sim.pass_rate(Channel::Cb),
                cr: sim.pass_rate(Channel::Cr),
                all: sim.pass_rate_all(),
            },
            cb_count: sim.jnd_pass.len(),
            pass_count,
            pass_count_all: sim.jnd_pass.iter().filter(|p| p.all()).count(),
        }
    }
}

/// Sequence-level totals: summed bits, PSNR from the pooled MSE, mean SSIM and
/// pass rates over every CB of every frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub frames: usize,
    pub bits: BitTotals,
    pub psnr: PerChannel<Db>,
    pub ssim: PerChannel<f64>,
    pub jnd_pass_rate: PassRates,
}

impl Aggregate {
    pub fn from_frames(stats: &[FrameStats], bit_depth: u8) -> Self {
        let n = stats.len().max(1) as f64;
        let mean = |f: &dyn Fn(&FrameStats) -> f64| stats.iter().map(f).sum::<f64>() / n;
        let cbs = stats.iter().map(|s| s.cb_count).sum::<usize>().max(1) as f64;
        let rate =
            |f: &dyn Fn(&FrameStats) -> usize| stats.iter().map(f).sum::<usize>() as f64 / cbs;
        Aggregate {
            frames: stats.len(),
            bits: BitTotals::sum(stats.iter().map(|s| &s.bits)),
            psnr: PerChannel::from_fn(|c| psnr_from_mse(mean(&|s| s.mse.get(c)), bit_depth)),
            ssim: PerChannel::from_fn(|c| mean(&|s| s.ssim.get(c))),
            jnd_pass_rate: PassRates {
                y: rate(&|s| s.pass_count.y),
                cb: rate(&|s| s.pass_count.cb),
                cr: rate(&|s| s.pass_count.cr),
                all: rate(&|s| s.pass_count_all),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateReport {
    pub header: RunHeader,
    pub frames: Vec<FrameStats>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub json: PathBuf,
    pub jnd_csv: PathBuf,
    pub recon: Option<PathBuf>,
    pub ssim_maps: Vec<PathBuf>,
    pub report: SimulateReport,
}

pub const JND_CSV_HEADER: &str =
    "frame,index,x,y,q_max_y,l_y,pass_y,q_max_cb,w_cb,pass_cb,q_max_cr,w_cr,pass_cr,bits_proxy";

struct SimFrame {
    stats: FrameStats,
    jnd_rows: String,
    recon: Option<Frame>,
    pgms: Vec<(String, Vec<u8>)>,
}

/// Simulates every selected frame under `config.mode` at `config.base_qp`.
///
/// Writes `simulate.json` and `jnd_pass.csv`, plus `recon.yuv` and per-channel
/// SSIM-map PGMs when requested.
pub fn cmd_simulate(config: &RunConfig) -> Result<SimulateOutput> {
    config.validate()?;
    let grid = partition(&config.spec, config.cb_size)?;
    let frames = map_frames(config, |i, frame| {
        let (map, sim, metrics) = process_frame(
            frame,
            &grid,
            config,
            config.mode,
            config.base_qp,
            config.emit_ssim_maps,
        )?;
        let mut rows = String::new();
        for ((c, p), (e, b)) in sim
            .per_cb
            .iter()
            .zip(&sim.jnd_pass)
            .zip(map.entries.iter().zip(&grid.luma_blocks))
        {
            writeln!(
                rows,
                "{i},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.luma_index,
                b.x,
                b.y,
                c.q_max_y,
                e.l_y,
                p.pass_y,
                c.q_max_cb,
                e.w_cb,
                p.pass_cb,
                c.q_max_cr,
                e.w_cr,
                p.pass_cr,
                c.bits_proxy
            )
            .expect("write to string");
        }
        let pgms = match &metrics.ssim_maps {
            Some(maps) => Channel::ALL
                .iter()
                .zip(maps)
                .map(|(ch, m)| {
                    (
                        format!("ssim_f{i:05}_{}.pgm", ch.to_string().to_lowercase()),
                        m.to_pgm(),
                    )
                })
                .collect(),
            None => Vec::new(),
        };
        Ok(SimFrame {
            stats: FrameStats::new(i, &sim, &metrics),
            jnd_rows: rows,
            recon: config.emit_recon.then_some(sim.recon),
            pgms,
        })
    })?;

    let stats: Vec<FrameStats> = frames.iter().map(|f| f.stats.clone()).collect();
    let report = SimulateReport {
        header: config.header()?,
        aggregate: Aggregate::from_frames(&stats, config.spec.bit_depth),
        frames: stats,
    };

    fs::create_dir_all(&config.out_dir)?;
    let json = config.out_dir.join("simulate.json");
    write_json(&json, &report)?;
    let jnd_csv = config.out_dir.join("jnd_pass.csv");
    let mut csv = String::from(JND_CSV_HEADER);
    csv.push('\n');
    for f in &frames {
        csv.push_str(&f.jnd_rows);
    }
    fs::write(&jnd_csv, csv)?;

    let recon = if config.emit_recon {
        let path = config.out_dir.join("recon.yuv");
        let range = config.frame_range()?;
        let spec = VideoSpec {
            frame_count: range.len(),
            ..config.spec
        };
        let mut sink = create_sequence(&path, spec)?;
        for f in &frames {
            sink.write_frame(f.recon.as_ref().expect("recon kept"))?;
        }
        sink.finish()?;
        Some(path)
    } else {
        None
    };

    let mut ssim_maps = Vec::new();
    for f in &frames {
        for (name, bytes) in &f.pgms {
            let path = config.out_dir.join(name);
            fs::write(&path, bytes)?;
            ssim_maps.push(path);
        }
    }
    log::info!(
        "simulate: {} frames, mode {}, QP {}, chroma bits {:.0}",
        report.aggregate.frames,
        config.mode,
        config.base_qp,
        report.aggregate.bits.chroma
    );
    Ok(SimulateOutput {
        json,
        jnd_csv,
        recon,
        ssim_maps,
        report,
    })
}

// ---------------------------------------------------------------- curves

/// Writes `curve_{luma,chroma}_b{depth}.csv` (columns `mu,weight`) per bit depth.
pub fn cmd_curves(
    bit_depths: &[u8],
    n_points: usize,
    params: &JndParams,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if n_points < 2 {
        return Err(Error::Config(format!(
            "curves need at least 2 points, got {n_points}"
        )));
    }
    if bit_depths.is_empty() {
        return Err(Error::Config("no bit depth requested".into()));
    }
    let mut files = Vec::new();
    for &b in bit_depths {
        if !crate::yuv_io::SUPPORTED_BIT_DEPTHS.contains(&b) {
            return Err(Error::Config(format!("unsupported bit depth {b}")));
        }
        params.validate(b)?;
        for (kind, name) in [(CurveKind::Luma, "luma"), (CurveKind::Chroma, "chroma")] {
            let mut text = String::from("mu,weight\n");
            for (mu, w) in curve_table(b, n_points, kind, params)? {
                writeln!(text, "{mu},{w}").expect("write to string");
            }
            files.push((out_dir.join(format!("curve_{name}_b{b}.csv")), text));
        }
    }
    fs::create_dir_all(out_dir)?;
    let mut paths = Vec::with_capacity(files.len());
    for (path, text) in files {
        fs::write(&path, text)?;
        paths.push(path);
    }
    Ok(paths)
}

// ---------------------------------------------------------------- info

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceInfo {
    pub spec: VideoSpec,
    pub chroma_plane: [usize; 2],
    pub frame_bytes: u64,
    pub sequence_bytes: u64,
    pub sequence_gib: f64,
    pub cb_size: usize,
    pub cb_grid: [usize; 2],
    pub luma_cbs: usize,
    pub luma_cb: [usize; 2],
    pub chroma_cb: [usize; 2],
}

pub fn cmd_info(spec: &VideoSpec, cb_size: usize) -> Result<SequenceInfo> {
    let grid = partition(spec, cb_size)?;
    let (cw, ch) = spec.chroma_dims();
    let (bw, bh) = grid.chroma_block_dims();
    let bytes = spec.sequence_byte_size();
    Ok(SequenceInfo {
        spec: *spec,
        chroma_plane: [cw, ch],
        frame_bytes: spec.frame_byte_size(),
        sequence_bytes: bytes,
        sequence_gib: bytes as f64 / (1u64 << 30) as f64,
        cb_size,
        cb_grid: [grid.cols, grid.rows],
        luma_cbs: grid.len(),
        luma_cb: [cb_size, cb_size],
        chroma_cb: [bw, bh],
    })
}

/// Frame count implied by the file length, for inputs given without one.
pub fn infer_frame_count(path: &Path, spec: &VideoSpec) -> Result<usize> {
    let len = fs::metadata(path)
        .map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?
        .len();
    let frame = VideoSpec {
        frame_count: 1,
        ..*spec
    }
    .frame_byte_size();
    let n = len / frame;
    if n == 0 || len % frame != 0 {
        return Err(Error::SizeMismatch {
            expected: n.max(1) * frame,
            actual: len,
        });
    }
    Ok(n as usize)
}
