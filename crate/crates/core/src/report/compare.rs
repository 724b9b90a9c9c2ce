use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::{
    check_base_qp, map_frames, process_frame, write_json, Aggregate, FrameStats, PerChannel,
    RunConfig,
};
use crate::block::{partition, Channel};
use crate::error::{Error, Result};
use crate::jnd::JndParams;
use crate::metrics::Db;
use crate::pquant::QpMode;
use crate::yuv_io::VideoSpec;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompareHeader {
    pub spec: VideoSpec,
    pub cb_size: usize,
    pub frames: [usize; 2],
    pub modes: Vec<QpMode>,
    pub qps: Vec<i32>,
    pub exact_weights: bool,
    pub theta: f64,
    pub params: JndParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeTotals {
    pub mode: QpMode,
    pub aggregate: Aggregate,
    pub per_frame: Vec<FrameStats>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDelta {
    pub frame: usize,
    pub chroma_bits_candidate: f64,
    pub chroma_bits_reference: f64,
    pub psnr_delta: PerChannel<Db>,
    pub ssim_delta: PerChannel<f64>,
}

/// Candidate minus reference; reductions are `100 * (1 - candidate / reference)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairComparison {
    pub candidate: QpMode,
    pub reference: QpMode,
    pub chroma_bits_reduction_pct: f64,
    pub total_bits_reduction_pct: f64,
    pub psnr_delta: PerChannel<Db>,
    pub ssim_delta: PerChannel<f64>,
    pub ssim_change_pct: PerChannel<f64>,
    pub per_frame: Vec<FrameDelta>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QpPoint {
    pub base_qp: i32,
    pub modes: Vec<ModeTotals>,
    pub comparisons: Vec<PairComparison>,
}

/// Candidate versus reference with bits averaged over all QP points first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverallComparison {
    pub candidate: QpMode,
    pub reference: QpMode,
    pub mean_chroma_bits_candidate: f64,
    pub mean_chroma_bits_reference: f64,
    pub chroma_bits_reduction_pct: f64,
    pub mean_psnr_delta: PerChannel<f64>,
    pub mean_ssim_delta: PerChannel<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub header: CompareHeader,
    pub qp_points: Vec<QpPoint>,
    pub overall: Vec<OverallComparison>,
}

fn reduction_pct(candidate: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        0.0
    } else {
        100.0 * (1.0 - candidate / reference)
    }
}

fn compare_pair(cand: &ModeTotals, refr: &ModeTotals) -> PairComparison {
    let (a, b) = (&cand.aggregate, &refr.aggregate);
    let per_frame = cand
        .per_frame
        .iter()
        .zip(&refr.per_frame)
        .map(|(c, r)| FrameDelta {
            frame: c.frame,
            chroma_bits_candidate: c.bits.chroma,
            chroma_bits_reference: r.bits.chroma,
            psnr_delta: PerChannel::from_fn(|ch| c.psnr.get(ch).delta(r.psnr.get(ch))),
            ssim_delta: PerChannel::from_fn(|ch| c.ssim.get(ch) - r.ssim.get(ch)),
        })
        .collect();
    PairComparison {
        candidate: cand.mode,
        reference: refr.mode,
        chroma_bits_reduction_pct: reduction_pct(a.bits.chroma, b.bits.chroma),
        total_bits_reduction_pct: reduction_pct(a.bits.total, b.bits.total),
        psnr_delta: PerChannel::from_fn(|ch| a.psnr.get(ch).delta(b.psnr.get(ch))),
        ssim_delta: PerChannel::from_fn(|ch| a.ssim.get(ch) - b.ssim.get(ch)),
        ssim_change_pct: PerChannel::from_fn(|ch| {
            let r = b.ssim.get(ch);
            if r == 0.0 {
                0.0
            } else {
                100.0 * (a.ssim.get(ch) - r) / r
            }
        }),
        per_frame,
    }
}

/// Runs every mode at every QP on the same frames. `modes[0]` is the candidate
/// and is compared against each of the others. Writes `compare.json`.
pub fn cmd_compare(
    config: &RunConfig,
    modes: &[QpMode],
    qps: &[i32],
) -> Result<(PathBuf, ComparisonSummary)> {
    if modes.len() < 2 {
        return Err(Error::Config("compare needs at least two modes".into()));
    }
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::Config(format!("mode {m} listed twice")));
        }
    }
    if qps.is_empty() {
        return Err(Error::Config("compare needs at least one QP".into()));
    }
    for &qp in qps {
        check_base_qp(qp)?;
    }
    config.validate()?;
    let grid = partition(&config.spec, config.cb_size)?;

    // per frame: stats for each (qp, mode), qp-major
    let frames = map_frames(config, |i, frame| {
        let mut out = Vec::with_capacity(qps.len() * modes.len());
        for &qp in qps {
            for &mode in modes {
                let (_, sim, metrics) = process_frame(frame, &grid, config, mode, qp, false)?;
                out.push(FrameStats::new(i, &sim, &metrics));
            }
        }
        Ok(out)
    })?;

    let b = config.spec.bit_depth;
    let qp_points: Vec<QpPoint> = qps
        .iter()
        .enumerate()
        .map(|(qi, &qp)| {
            let totals: Vec<ModeTotals> = modes
                .iter()
                .enumerate()
                .map(|(mi, &mode)| {
                    let per_frame: Vec<FrameStats> = frames
                        .iter()
                        .map(|f| f[qi * modes.len() + mi].clone())
                        .collect();
                    ModeTotals {
                        mode,
                        aggregate: Aggregate::from_frames(&per_frame, b),
                        per_frame,
                    }
                })
                .collect();
            let comparisons = totals[1..]
                .iter()
                .map(|r| compare_pair(&totals[0], r))
                .collect();
            QpPoint {
                base_qp: qp,
                modes: totals,
                comparisons,
            }
        })
        .collect();

    let nq = qp_points.len() as f64;
    let overall = (1..modes.len())
        .map(|ri| {
            let mean_bits = |mi: usize| {
                qp_points
                    .iter()
                    .map(|p| p.modes[mi].aggregate.bits.chroma)
                    .sum::<f64>()
                    / nq
            };
            let (cand, refr) = (mean_bits(0), mean_bits(ri));
            let mean_delta = |f: &dyn Fn(&PairComparison) -> f64| {
                qp_points
                    .iter()
                    .map(|p| f(&p.comparisons[ri - 1]))
                    .sum::<f64>()
                    / nq
            };
            OverallComparison {
                candidate: modes[0],
                reference: modes[ri],
                mean_chroma_bits_candidate: cand,
                mean_chroma_bits_reference: refr,
                chroma_bits_reduction_pct: reduction_pct(cand, refr),
                mean_psnr_delta: PerChannel::from_fn(|ch: Channel| {
                    mean_delta(&|c| c.psnr_delta.get(ch).0)
                }),
                mean_ssim_delta: PerChannel::from_fn(|ch: Channel| {
                    mean_delta(&|c| c.ssim_delta.get(ch))
                }),
            }
        })
        .collect();

    let range = config.frame_range()?;
    let summary = ComparisonSummary {
        header: CompareHeader {
            spec: config.spec,
            cb_size: config.cb_size,
            frames: [range.start, range.end],
            modes: modes.to_vec(),
            qps: qps.to_vec(),
            exact_weights: config.exact_weights,
            theta: config.theta,
            params: config.params,
        },
        qp_points,
        overall,
    };

    fs::create_dir_all(&config.out_dir)?;
    let path = config.out_dir.join("compare.json");
    write_json(&path, &summary)?;
    for o in &summary.overall {
        log::info!(
            "compare: {} vs {}: chroma bits reduction {:.2}%",
            o.candidate,
            o.reference,
            o.chroma_bits_reduction_pct
        );
    }
    Ok((path, summary))
}
