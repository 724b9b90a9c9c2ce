use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use pixel_paq::block::DEFAULT_CB_SIZE;
use pixel_paq::codec_sim::DEFAULT_DEADZONE_THETA;
use pixel_paq::report::{
    cmd_analyze, cmd_compare, cmd_curves, cmd_info, cmd_simulate, infer_frame_count, RunConfig,
};
use pixel_paq::synth::{write_synth_sequence, SynthConfig};
use pixel_paq::{ChromaFormat, Error, JndParams, QpMode, VideoSpec};

#[derive(Parser)]
#[command(
    name = "pixel-paq",
    version,
    about = "JND-based perceptual quantisation analysis for raw YCbCr sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-CB JND weights and QPs as qpmap.json / qpmap.csv
    Analyze {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 22)]
        qp: i32,
        #[arg(long, default_value = "pixel-paq")]
        mode: QpMode,
    },
    /// Simulate quantisation and report bits, PSNR, SSIM and JND pass rates
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 22)]
        qp: i32,
        #[arg(long, default_value = "pixel-paq")]
        mode: QpMode,
        #[arg(long)]
        emit_recon: bool,
        #[arg(long)]
        emit_ssim_maps: bool,
    },
    /// Compare the first mode against the others at one or more QPs
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Candidate first, then the references
        #[arg(
            long = "modes",
            alias = "mode",
            value_delimiter = ',',
            default_value = "pixel-paq,idsq"
        )]
        modes: Vec<QpMode>,
        #[arg(
            long = "qps",
            alias = "qp",
            value_delimiter = ',',
            default_value = "22"
        )]
        qps: Vec<i32>,
    },
    /// Tabulate the luma and chroma weight curves
    Curves {
        #[arg(long = "bit-depth", value_delimiter = ',', default_value = "8,10")]
        bit_depths: Vec<u8>,
        #[arg(long, default_value_t = 256)]
        points: usize,
        #[arg(long)]
        no_knee_scaling: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Raw size and CB grid accounting for a sequence
    Info {
        #[command(flatten)]
        spec: SpecArgs,
        /// Infer the frame count from this file
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CB_SIZE)]
        cb_size: usize,
    },
    /// Write a seeded synthetic test sequence
    Synth {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SpecArgs {
    /// JSON file holding a video spec; explicit flags override its fields
    #[arg(long = "spec")]
    spec_file: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    bit_depth: Option<u8>,
    #[arg(long = "chroma", alias = "chroma-format")]
    chroma_format: Option<ChromaFormat>,
    #[arg(long)]
    frame_count: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = DEFAULT_CB_SIZE)]
    cb_size: usize,
    /// Use the fractional luma weight instead of its ceiling
    #[arg(long)]
    exact_weights: bool,
    /// Keep the chroma knees at their 8-bit positions for every bit depth
    #[arg(long)]
    no_knee_scaling: bool,
    #[arg(long, default_value_t = DEFAULT_DEADZONE_THETA)]
    theta: f64,
    /// Half-open frame range `A..B`
    #[arg(long, value_parser = parse_range)]
    frames: Option<std::ops::Range<usize>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn parse_range(s: &str) -> Result<std::ops::Range<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b = b.trim().parse().map_err(|e| format!("{e}"))?;
    Ok(a..b)
}

impl SpecArgs {
    fn resolve(&self, input: Option<&Path>) -> Result<VideoSpec, Error> {
        let base: Option<VideoSpec> = match &self.spec_file {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| match e.kind() {
                    std::io::ErrorKind::NotFound => Error::FileNotFound(p.clone()),
                    _ => Error::Io(e),
                })?;
                Some(serde_json::from_str(&text)?)
            }
            None => None,
        };
        let missing = |what: &str| Error::Config(format!("--{what} is required without --spec"));
        let mut spec = VideoSpec {
            width: self
                .width
                .or(base.map(|s| s.width))
                .ok_or_else(|| missing("width"))?,
            height: self
                .height
                .or(base.map(|s| s.height))
                .ok_or_else(|| missing("height"))?,
            bit_depth: self.bit_depth.or(base.map(|s| s.bit_depth)).unwrap_or(8),
            chroma_format: self
                .chroma_format
                .or(base.map(|s| s.chroma_format))
                .unwrap_or(ChromaFormat::C420),
            frame_count: 1,
        };
        spec.frame_count = match (self.frame_count.or(base.map(|s| s.frame_count)), input) {
            (Some(n), _) => n,
            (None, Some(path)) => {
                spec.validate()?;
                infer_frame_count(path, &spec)?
            }
            (None, None) => return Err(missing("frame-count")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RunArgs {
    fn config(&self, base_qp: i32, mode: QpMode) -> Result<RunConfig, Error> {
        let spec = self.spec.resolve(Some(&self.input))?;
        let mut c = RunConfig::new(&self.input, spec, &self.out);
        c.cb_size = self.cb_size;
        c.base_qp = base_qp;
        c.mode = mode;
        c.exact_weights = self.exact_weights;
        c.params.scale_chroma_knees = !self.no_knee_scaling;
        c.theta = self.theta;
        c.frames = self.frames.clone();
        Ok(c)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { run, qp, mode } => {
            let out = cmd_analyze(&run.config(qp, mode)?)?;
            println!("{}\n{}", out.json.display(), out.csv.display());
        }
        Command::Simulate {
            run,
            qp,
            mode,
            emit_recon,
            emit_ssim_maps,
        } => {
            let mut c = run.config(qp, mode)?;
            c.emit_recon = emit_recon;
            c.emit_ssim_maps = emit_ssim_maps;
            let out = cmd_simulate(&c)?;
            print_json(&out.report.aggregate)?;
        }
        Command::Compare { run, modes, qps } => {
            let first = *qps.first().context("no QP given")?;
            let (path, summary) = cmd_compare(&run.config(first, modes[0])?, &modes, &qps)?;
            print_json(&summary.overall)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Curves {
            bit_depths,
            points,
            no_knee_scaling,
            out,
        } => {
            let params = JndParams {
                scale_chroma_knees: !no_knee_scaling,
                ..JndParams::default()
            };
            for p in cmd_curves(&bit_depths, points, &params, &out)? {
                println!("{}", p.display());
            }
        }
        Command::Info {
            spec,
            input,
            cb_size,
        } => {
            let spec = spec.resolve(input.as_deref())?;
            print_json(&cmd_info(&spec, cb_size)?)?;
        }
        Command::Synth { spec, seed, out } => {
            let spec = spec.resolve(None)?;
            write_synth_sequence(&out, &SynthConfig::new(spec, seed))?;
            println!("{}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = err
                .downcast_ref::<Error>()
                .map(|e| e.kind().exit_code())
                .unwrap_or(1);
            eprintln!("error: {err:#}");
            ExitCode::from(code as u8)
        }
    }
}
