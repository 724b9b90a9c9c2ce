//! Dead-zone scalar quantiser with uniform reconstruction.

use crate::error::{Error, Result};

/// Rounding offset used for intra blocks.
pub const DEFAULT_DEADZONE_THETA: f64 = 1.0 / 3.0;

fn check_step(qstep: f64) -> Result<()> {
    if qstep > 0.0 && qstep.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveQStep(qstep))
    }
}

#[inline]
pub fn quantize_coeff(c: f64, qstep: f64, theta: f64) -> i64 {
    let level = (c.abs() / qstep + theta).floor() as i64;
    if c < 0.0 {
        -level
    } else {
        level
    }
}

/// `sign(c)·floor(|c|/qstep + theta)` for every coefficient.
pub fn quantize(coeffs: &[f64], qstep: f64, theta: f64) -> Result<Vec<i64>> {
    check_step(qstep)?;
    Ok(coeffs
        .iter()
        .map(|&c| quantize_coeff(c, qstep, theta))
        .collect())
}

pub fn dequantize(levels: &[i64], qstep: f64) -> Result<Vec<f64>> {
    check_step(qstep)?;
    Ok(levels.iter().map(|&l| l as f64 * qstep).collect())
}
