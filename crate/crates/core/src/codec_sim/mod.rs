//! Intra-only transform/quantise/reconstruct simulation.
//!
//! Each CB is predicted by its rounded mean, the residual is transformed with a
//! floating orthonormal DCT, quantised with the QStep the map assigns to that
//! channel, and reconstructed. The per-CB pixel error is checked against the
//! block's JND thresholds, and a CABAC-free bit estimate is accumulated from the
//! quantised levels. The bit estimate is only meaningful relative to another run.

mod quant;
mod transform;

pub use quant::{dequantize, quantize, quantize_coeff, DEFAULT_DEADZONE_THETA};
pub use transform::{forward_transform, inverse_transform, Dct2d};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::block::{block_samples, BlockGrid, Channel, CodingBlock};
use crate::error::{Error, Result};
use crate::jnd::JndWeights;
use crate::pquant::QpMap;
use crate::yuv_io::{Frame, Plane};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CbResult {
    pub luma_index: usize,
    pub q_max_y: f64,
    pub q_max_cb: f64,
    pub q_max_cr: f64,
    pub nonzero_y: usize,
    pub nonzero_cb: usize,
    pub nonzero_cr: usize,
    pub bits_y: f64,
    pub bits_cb: f64,
    pub bits_cr: f64,
    pub bits_proxy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JndPass {
    pub pass_y: bool,
    pub pass_cb: bool,
    pub pass_cr: bool,
}

impl JndPass {
    pub fn all(&self) -> bool {
        self.pass_y && self.pass_cb && self.pass_cr
    }

    pub fn get(&self, channel: Channel) -> bool {
        match channel {
            Channel::Y => self.pass_y,
            Channel::Cb => self.pass_cb,
            Channel::Cr => self.pass_cr,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub recon: Frame,
    pub per_cb: Vec<CbResult>,
    pub jnd_pass: Vec<JndPass>,
}

impl SimResult {
    pub fn bits(&self, channel: Channel) -> f64 {
        self.per_cb
            .iter()
            .map(|r| match channel {
                Channel::Y => r.bits_y,
                Channel::Cb => r.bits_cb,
                Channel::Cr => r.bits_cr,
            })
            .sum()
    }

    pub fn total_bits(&self) -> f64 {
        self.per_cb.iter().map(|r| r.bits_proxy).sum()
    }

    /// Fraction of CBs passing the JND check, per channel.
    pub fn pass_rate(&self, channel: Channel) -> f64 {
        if self.jnd_pass.is_empty() {
            return 1.0;
        }
        let n = self.jnd_pass.iter().filter(|p| p.get(channel)).count();
        n as f64 / self.jnd_pass.len() as f64
    }

    /// Fraction of CBs passing on all three channels.
    pub fn pass_rate_all(&self) -> f64 {
        if self.jnd_pass.is_empty() {
            return 1.0;
        }
        let n = self.jnd_pass.iter().filter(|p| p.all()).count();
        n as f64 / self.jnd_pass.len() as f64
    }
}

/// Levels to bits: `log2(1 + |level|)` plus one sign bit per nonzero level.
pub fn level_bits(levels: &[i64]) -> (f64, usize) {
    let mut bits = 0.0;
    let mut nonzero = 0;
    for &l in levels {
        if l != 0 {
            bits += (1.0 + l.unsigned_abs() as f64).log2() + 1.0;
            nonzero += 1;
        }
    }
    (bits, nonzero)
}

struct BlockOutcome {
    recon: Vec<u16>,
    q_max: f64,
    nonzero: usize,
    bits: f64,
}

struct BlockCoder<'a> {
    dct: &'a Dct2d,
    theta: f64,
    max_sample: f64,
}

impl BlockCoder<'_> {
    fn code(
        &self,
        plane: &Plane,
        channel: Channel,
        block: &CodingBlock,
        mean: f64,
        qstep: f64,
    ) -> Result<BlockOutcome> {
        let samples = block_samples(plane, channel, block)?;
        let pred = mean.round();
        let residual: Vec<f64> = samples.iter().map(|&s| f64::from(s) - pred).collect();
        let coeffs = self.dct.forward(&residual)?;
        let levels = quantize(&coeffs, qstep, self.theta)?;
        let (bits, nonzero) = level_bits(&levels);
        let decoded = self.dct.inverse(&dequantize(&levels, qstep)?)?;

        let (vw, vh) = block.valid_dims(plane.width, plane.height);
        let mut recon = Vec::with_capacity(vw * vh);
        let mut q_max = 0.0f64;
        for dy in 0..vh {
            for dx in 0..vw {
                let i = dy * block.w + dx;
                let r = (pred + decoded[i]).round().clamp(0.0, self.max_sample);
                q_max = q_max.max((f64::from(samples[i]) - r).abs());
                recon.push(r as u16);
            }
        }
        Ok(BlockOutcome {
            recon,
            q_max,
            nonzero,
            bits,
        })
    }
}

fn paste(plane: &mut Plane, block: &CodingBlock, recon: &[u16]) {
    let (vw, vh) = block.valid_dims(plane.width, plane.height);
    for dy in 0..vh {
        let start = (block.y + dy) * plane.width + block.x;
        plane.samples[start..start + vw].copy_from_slice(&recon[dy * vw..(dy + 1) * vw]);
    }
}

/// Codes every CB of `frame` with the QSteps of `map` and checks each block's
/// maximum reconstruction error against `thresholds`.
pub fn simulate_frame(
    frame: &Frame,
    grid: &BlockGrid,
    map: &QpMap,
    thresholds: &[JndWeights],
    theta: f64,
) -> Result<SimResult> {
    if map.entries.len() != grid.len() {
        return Err(Error::GridMapMismatch {
            map: map.entries.len(),
            grid: grid.len(),
        });
    }
    if thresholds.len() != grid.len() {
        return Err(Error::GridMapMismatch {
            map: thresholds.len(),
            grid: grid.len(),
        });
    }
    let spec = &grid.spec;
    frame.validate(spec)?;
    let max_sample = f64::from(spec.max_sample());
    let luma_dct = Dct2d::new(grid.cb_size, grid.cb_size)?;
    let (cw, ch) = grid.chroma_block_dims();
    let chroma_dct = Dct2d::new(cw, ch)?;
    let luma = BlockCoder {
        dct: &luma_dct,
        theta,
        max_sample,
    };
    let chroma = BlockCoder {
        dct: &chroma_dct,
        ..luma
    };

    let outcomes = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let entry = &map.entries[i];
            let t = &thresholds[i];
            let run = |coder: &BlockCoder, channel: Channel, mean: f64| {
                coder.code(
                    frame.plane(channel),
                    channel,
                    &grid.blocks(channel)[i],
                    mean,
                    entry.qstep(channel),
                )
            };
            Ok([
                run(&luma, Channel::Y, t.mu_y)?,
                run(&chroma, Channel::Cb, t.mu_cb)?,
                run(&chroma, Channel::Cr, t.mu_cr)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut recon = frame.clone();
    let mut per_cb = Vec::with_capacity(grid.len());
    let mut jnd_pass = Vec::with_capacity(grid.len());
    for (i, [y, cb, cr]) in outcomes.into_iter().enumerate() {
        for (channel, o) in [(Channel::Y, &y), (Channel::Cb, &cb), (Channel::Cr, &cr)] {
            paste(recon.plane_mut(channel), &grid.blocks(channel)[i], &o.recon);
        }
        let t = &thresholds[i];
        jnd_pass.push(JndPass {
            pass_y: y.q_max <= t.l_y,
            pass_cb: cb.q_max <= t.w_cb,
            pass_cr: cr.q_max <= t.w_cr,
        });
        per_cb.push(CbResult {
            luma_index: i,
            q_max_y: y.q_max,
            q_max_cb: cb.q_max,
            q_max_cr: cr.q_max,
            nonzero_y: y.nonzero,
            nonzero_cb: cb.nonzero,
            nonzero_cr: cr.nonzero,
            bits_y: y.bits,
            bits_cb: cb.bits,
            bits_cr: cr.bits,
            bits_proxy: y.bits + cb.bits + cr.bits,
        });
    }
    Ok(SimResult {
        recon,
        per_cb,
        jnd_pass,
    })
}
