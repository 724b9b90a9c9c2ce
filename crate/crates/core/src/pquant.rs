//! QP/QStep arithmetic and per-CB perceptual QP maps.
//!
//! A luma CB's QStep is scaled by its (ceiled) luma JND weight and converted
//! back to a QP. Chroma QPs are then signalled as offsets against that
//! perceptual luma QP, `3·w` rounded half-up, where `w` is the chroma JND weight
//! of the co-located chroma CB.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::block::{valid_samples, BlockGrid, Channel};
use crate::error::{Error, Result};
use crate::jnd::{block_mean, JndParams, JndWeights};
use crate::yuv_io::Frame;

pub const MIN_QP: i32 = 0;
pub const MAX_QP: i32 = 51;

/// Guards the ceiling in [`qp_from_qstep`] against `log2` landing a hair above
/// an exact integer.
const CEIL_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QpMode {
    #[serde(rename = "pixel-paq")]
    PixelPaq,
    #[serde(rename = "idsq")]
    Idsq,
    #[serde(rename = "uniform")]
    Uniform,
}

impl QpMode {
    pub fn as_str(self) -> &'static str {
        match self {
            QpMode::PixelPaq => "pixel-paq",
            QpMode::Idsq => "idsq",
            QpMode::Uniform => "uniform",
        }
    }
}

impl fmt::Display for QpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QpMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pixel-paq" => Ok(QpMode::PixelPaq),
            "idsq" => Ok(QpMode::Idsq),
            "uniform" => Ok(QpMode::Uniform),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

fn check_qp(qp: i32) -> Result<()> {
    if (MIN_QP..=MAX_QP).contains(&qp) {
        Ok(())
    } else {
        Err(Error::QpOutOfRange(qp))
    }
}

fn clip_qp(qp: i32) -> i32 {
    qp.clamp(MIN_QP, MAX_QP)
}

fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

pub fn qstep_from_qp(qp: i32) -> Result<f64> {
    check_qp(qp)?;
    Ok(2f64.powf(f64::from(qp - 4) / 6.0))
}

/// `ceil(6·log2(qstep)) + 4`, unclipped.
pub fn qp_from_qstep(qstep: f64) -> Result<i32> {
    if qstep.is_nan() || qstep <= 0.0 || !qstep.is_finite() {
        return Err(Error::NonPositiveQStep(qstep));
    }
    Ok((6.0 * qstep.log2() - CEIL_EPSILON).ceil() as i32 + 4)
}

fn check_weight(w: f64) -> Result<()> {
    if w >= 1.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!("JND weight {w} below 1")))
    }
}

/// Perceptual luma step and QP for a CB with luma weight `l_y`.
///
/// The weight is ceiled before scaling unless `exact_weights` is set.
pub fn perceptual_luma(base_qp: i32, l_y: f64, exact_weights: bool) -> Result<(f64, i32)> {
    check_weight(l_y)?;
    let factor = if exact_weights { l_y } else { l_y.ceil() };
    let pstep = qstep_from_qp(base_qp)? * factor;
    Ok((pstep, clip_qp(qp_from_qstep(pstep)?)))
}

/// Chroma QP as an offset of `round(3·w)` against the perceptual luma QP.
pub fn chroma_offset(pqp_y: i32, w: f64) -> Result<(i32, f64)> {
    check_qp(pqp_y)?;
    check_weight(w)?;
    let oqp = clip_qp(pqp_y + round_half_up(3.0 * w) as i32);
    Ok((oqp, qstep_from_qp(oqp)?))
}

/// Standalone perceptual chroma step and QP; the weight is rounded half-up
/// unless `exact_weights` is set.
pub fn perceptual_chroma(base_qp: i32, w: f64, exact_weights: bool) -> Result<(f64, i32)> {
    check_weight(w)?;
    let factor = if exact_weights { w } else { round_half_up(w) };
    let pstep = qstep_from_qp(base_qp)? * factor;
    Ok((pstep, clip_qp(qp_from_qstep(pstep)?)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpMapEntry {
    pub luma_index: usize,
    pub mu_y: f64,
    pub mu_cb: f64,
    pub mu_cr: f64,
    pub l_y: f64,
    pub w_cb: f64,
    pub w_cr: f64,
    pub qp_y_base: i32,
    pub pqp_y: i32,
    pub oqp_cb: i32,
    pub oqp_cr: i32,
    pub pstep_y: f64,
    pub ostep_cb: f64,
    pub ostep_cr: f64,
}

impl QpMapEntry {
    pub fn weights(&self) -> JndWeights {
        JndWeights {
            l_y: self.l_y,
            w_cb: self.w_cb,
            w_cr: self.w_cr,
            mu_y: self.mu_y,
            mu_cb: self.mu_cb,
            mu_cr: self.mu_cr,
        }
    }

    pub fn qstep(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Y => self.pstep_y,
            Channel::Cb => self.ostep_cb,
            Channel::Cr => self.ostep_cr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpMap {
    pub mode: QpMode,
    pub base_qp: i32,
    pub exact_weights: bool,
    pub entries: Vec<QpMapEntry>,
}

impl QpMap {
    /// Per-CB JND thresholds carried by the map.
    pub fn thresholds(&self) -> Vec<JndWeights> {
        self.entries.iter().map(QpMapEntry::weights).collect()
    }
}

/// Means over the in-frame samples of every CB, and their JND weights.
pub fn block_weights(
    frame: &Frame,
    grid: &BlockGrid,
    params: &JndParams,
) -> Result<Vec<JndWeights>> {
    let spec = &grid.spec;
    frame.validate(spec)?;
    params.validate(spec.bit_depth)?;
    (0..grid.len())
        .map(|i| {
            let mu = |channel: Channel| {
                block_mean(&valid_samples(
                    frame.plane(channel),
                    &grid.blocks(channel)[i],
                ))
            };
            JndWeights::from_means(
                mu(Channel::Y)?,
                mu(Channel::Cb)?,
                mu(Channel::Cr)?,
                spec.bit_depth,
                params,
            )
        })
        .collect()
}

pub fn build_qp_map(
    frame: &Frame,
    grid: &BlockGrid,
    base_qp: i32,
    mode: QpMode,
    params: &JndParams,
    exact_weights: bool,
) -> Result<QpMap> {
    check_qp(base_qp)?;
    let base_step = qstep_from_qp(base_qp)?;
    let entries = block_weights(frame, grid, params)?
        .into_iter()
        .enumerate()
        .map(|(luma_index, w)| {
            let (pstep_y, pqp_y, oqp_cb, ostep_cb, oqp_cr, ostep_cr) = match mode {
                QpMode::Uniform => (base_step, base_qp, base_qp, base_step, base_qp, base_step),
                QpMode::Idsq => {
                    let (pstep, pqp) = perceptual_luma(base_qp, w.l_y, exact_weights)?;
                    let ostep = qstep_from_qp(pqp)?;
                    (pstep, pqp, pqp, ostep, pqp, ostep)
                }
                QpMode::PixelPaq => {
                    let (pstep, pqp) = perceptual_luma(base_qp, w.l_y, exact_weights)?;
                    let (oqp_cb, ostep_cb) = chroma_offset(pqp, w.w_cb)?;
                    let (oqp_cr, ostep_cr) = chroma_offset(pqp, w.w_cr)?;
                    (pstep, pqp, oqp_cb, ostep_cb, oqp_cr, ostep_cr)
                }
            };
            Ok(QpMapEntry {
                luma_index,
                mu_y: w.mu_y,
                mu_cb: w.mu_cb,
                mu_cr: w.mu_cr,
                l_y: w.l_y,
                w_cb: w.w_cb,
                w_cr: w.w_cr,
                qp_y_base: base_qp,
                pqp_y,
                oqp_cb,
                oqp_cr,
                pstep_y,
                ostep_cb,
                ostep_cr,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(QpMap {
        mode,
        base_qp,
        exact_weights,
        entries,
    })
}
