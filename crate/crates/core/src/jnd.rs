//! Luminance and chrominance JND weight functions.
//!
//! The luma weight is a parabola in the normalised block mean `μ/2^b`: it peaks
//! at `a + 1` for black, reaches exactly 1 at mid-grey and rises to `c + 1`
//! towards white. Because it depends on `μ/2^b` only, the curve has the same
//! shape at every bit depth.
//!
//! The chroma weight is piecewise linear: it falls from `g` at zero to 1 at the
//! lower knee `h`, stays at 1 up to the upper knee `j`, then climbs to `k` at
//! the top of the sample range. The knees are 8-bit values; by default they are
//! scaled by `2^(b-8)` for deeper data.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JndParams {
    pub a: f64,
    pub c: f64,
    pub d: f64,
    pub f: f64,
    pub g: f64,
    pub h: f64,
    pub j: f64,
    pub k: f64,
    pub scale_chroma_knees: bool,
}

impl Default for JndParams {
    fn default() -> Self {
        JndParams {
            a: 2.0,
            c: 0.8,
            d: 3.0,
            f: 2.0,
            g: 3.0,
            h: 85.0,
            j: 90.0,
            k: 3.0,
            scale_chroma_knees: true,
        }
    }
}

impl JndParams {
    /// Lower and upper chroma knees at bit depth `b`.
    pub fn chroma_knees(&self, bit_depth: u8) -> (f64, f64) {
        if self.scale_chroma_knees {
            let s = f64::from(1u32 << bit_depth.saturating_sub(8));
            (self.h * s, self.j * s)
        } else {
            (self.h, self.j)
        }
    }

    pub fn validate(&self, bit_depth: u8) -> Result<()> {
        let (h, j) = self.chroma_knees(bit_depth);
        let max = sample_max(bit_depth);
        let ok = self.a > 0.0
            && self.c > 0.0
            && self.d > 0.0
            && self.f > 0.0
            && self.g >= 1.0
            && self.k >= 1.0
            && 0.0 < h
            && h < j
            && j < max;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "{self:?} at bit depth {bit_depth} (knees {h}, {j})"
            )))
        }
    }
}

/// Block means and the JND thresholds derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JndWeights {
    pub l_y: f64,
    pub w_cb: f64,
    pub w_cr: f64,
    pub mu_y: f64,
    pub mu_cb: f64,
    pub mu_cr: f64,
}

impl JndWeights {
    pub fn from_means(
        mu_y: f64,
        mu_cb: f64,
        mu_cr: f64,
        bit_depth: u8,
        p: &JndParams,
    ) -> Result<Self> {
        Ok(JndWeights {
            l_y: luma_weight(mu_y, bit_depth, p)?,
            w_cb: chroma_weight(mu_cb, bit_depth, p)?,
            w_cr: chroma_weight(mu_cr, bit_depth, p)?,
            mu_y,
            mu_cb,
            mu_cr,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Luma,
    Chroma,
}

fn sample_max(bit_depth: u8) -> f64 {
    ((1u64 << bit_depth) - 1) as f64
}

fn check_mean(mu: f64, bit_depth: u8) -> Result<()> {
    let max = sample_max(bit_depth);
    if (0.0..=max).contains(&mu) {
        Ok(())
    } else {
        Err(Error::MeanOutOfRange { mu, max })
    }
}

/// Arithmetic mean of a block, accumulated exactly in integers.
pub fn block_mean(samples: &[u16]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyBlock);
    }
    let sum: u64 = samples.iter().map(|&s| u64::from(s)).sum();
    Ok(sum as f64 / samples.len() as f64)
}

pub fn luma_weight(mu: f64, bit_depth: u8, p: &JndParams) -> Result<f64> {
    check_mean(mu, bit_depth)?;
    let x = 2.0 * mu / (1u64 << bit_depth) as f64;
    Ok(if x <= 1.0 {
        p.a * (1.0 - x).powf(p.d) + 1.0
    } else {
        p.c * (x - 1.0).powf(p.f) + 1.0
    })
}

pub fn chroma_weight(mu: f64, bit_depth: u8, p: &JndParams) -> Result<f64> {
    check_mean(mu, bit_depth)?;
    let (h, j) = p.chroma_knees(bit_depth);
    Ok(if mu <= h {
        p.g - (p.g - 1.0) * mu / h
    } else if mu < j {
        1.0
    } else {
        1.0 + (p.k - 1.0) * (mu - j) / (sample_max(bit_depth) - j)
    })
}

/// `n_points` evenly spaced means over the full sample range with their weights.
pub fn curve_table(
    bit_depth: u8,
    n_points: usize,
    which: CurveKind,
    p: &JndParams,
) -> Result<Vec<(f64, f64)>> {
    if n_points < 2 {
        return Err(Error::Config(format!(
            "a curve needs at least 2 points, got {n_points}"
        )));
    }
    let max = sample_max(bit_depth);
    (0..n_points)
        .map(|i| {
            let mu = if i + 1 == n_points {
                max
            } else {
                max * i as f64 / (n_points - 1) as f64
            };
            let w = match which {
                CurveKind::Luma => luma_weight(mu, bit_depth, p)?,
                CurveKind::Chroma => chroma_weight(mu, bit_depth, p)?,
            };
            Ok((mu, w))
        })
        .collect()
}
