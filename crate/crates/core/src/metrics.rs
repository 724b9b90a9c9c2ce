//! Per-channel PSNR and SSIM.
//!
//! SSIM uses an 11×11 Gaussian window (σ = 1.5) with K1 = 0.01, K2 = 0.03 and
//! the dynamic range of the sample bit depth. Only window positions that fit
//! entirely inside the plane are evaluated, so the index map is
//! `(w − 10)×(h − 10)` and the frame score is its mean.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::block::Channel;
use crate::error::{Error, Result};
use crate::yuv_io::{max_sample, Frame, Plane};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// A decibel value. Infinity (identical planes) serialises as the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Db(pub f64);

impl Db {
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `self − other`, with two infinities comparing equal.
    pub fn delta(self, other: Db) -> Db {
        if self.0 == other.0 {
            Db(0.0)
        } else {
            Db(self.0 - other.0)
        }
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 == f64::INFINITY {
            f.write_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            f.write_str("-inf")
        } else {
            write!(f, "{:.4}", self.0)
        }
    }
}

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0 == f64::INFINITY {
            s.serialize_str("inf")
        } else if self.0 == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct DbVisitor;

        impl Visitor<'_> for DbVisitor {
            type Value = Db;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Db, E> {
                Ok(Db(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Db, E> {
                Ok(Db(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Db, E> {
                Ok(Db(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Db, E> {
                match v {
                    "inf" => Ok(Db(f64::INFINITY)),
                    "-inf" => Ok(Db(f64::NEG_INFINITY)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }

        d.deserialize_any(DbVisitor)
    }
}

fn check_dims(orig: &Plane, recon: &Plane) -> Result<()> {
    if orig.width != recon.width
        || orig.height != recon.height
        || orig.samples.len() != recon.samples.len()
    {
        return Err(Error::DimsMismatch(format!(
            "{}x{} vs {}x{}",
            orig.width, orig.height, recon.width, recon.height
        )));
    }
    Ok(())
}

pub fn mse(orig: &Plane, recon: &Plane) -> Result<f64> {
    check_dims(orig, recon)?;
    let sse: u64 = orig
        .samples
        .iter()
        .zip(&recon.samples)
        .map(|(&a, &b)| {
            let d = i64::from(a) - i64::from(b);
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / orig.samples.len() as f64)
}

pub fn psnr_from_mse(mse: f64, bit_depth: u8) -> Db {
    if mse == 0.0 {
        return Db(f64::INFINITY);
    }
    let peak = f64::from(max_sample(bit_depth));
    Db(10.0 * (peak * peak / mse).log10())
}

pub fn psnr(orig: &Plane, recon: &Plane, bit_depth: u8) -> Result<Db> {
    Ok(psnr_from_mse(mse(orig, recon)?, bit_depth))
}

/// Per-window SSIM values, row-major, one per valid window centre.
#[derive(Debug, Clone, PartialEq)]
pub struct SsimMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl SsimMap {
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Binary greyscale PGM, `round(255·clamp(ssim, 0, 1))` per pixel.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(
            self.values
                .iter()
                .map(|&v| (255.0 * v.clamp(0.0, 1.0)).round() as u8),
        );
        out
    }
}

/// Normalised 1-D Gaussian; the 2-D window is its outer product.
pub fn gaussian_kernel(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size / 2) as f64;
    let mut k: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Valid-mode separable filtering of a `w×h` image.
fn filter_valid(img: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &img[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        let dst = &mut out[y * ow..(y + 1) * ow];
        for (i, &kv) in k.iter().enumerate() {
            let src = &horiz[(y + i) * ow..(y + i + 1) * ow];
            for (d, s) in dst.iter_mut().zip(src) {
                *d += kv * s;
            }
        }
    }
    out
}

pub fn ssim(orig: &Plane, recon: &Plane, bit_depth: u8) -> Result<(f64, SsimMap)> {
    check_dims(orig, recon)?;
    let (w, h) = (orig.width, orig.height);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::PlaneTooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let range = f64::from(max_sample(bit_depth));
    let c1 = (SSIM_K1 * range).powi(2);
    let c2 = (SSIM_K2 * range).powi(2);
    let k = gaussian_kernel(SSIM_WINDOW, SSIM_SIGMA);

    let x: Vec<f64> = orig.samples.iter().map(|&v| f64::from(v)).collect();
    let y: Vec<f64> = recon.samples.iter().map(|&v| f64::from(v)).collect();
    let prod = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p * q).collect() };
    let mu_x = filter_valid(&x, w, h, &k);
    let mu_y = filter_valid(&y, w, h, &k);
    let xx = filter_valid(&prod(&x, &x), w, h, &k);
    let yy = filter_valid(&prod(&y, &y), w, h, &k);
    let xy = filter_valid(&prod(&x, &y), w, h, &k);

    let values: Vec<f64> = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .collect();
    let map = SsimMap {
        width: w - SSIM_WINDOW + 1,
        height: h - SSIM_WINDOW + 1,
        values,
    };
    Ok((map.mean(), map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub psnr_y: Db,
    pub psnr_cb: Db,
    pub psnr_cr: Db,
    pub ssim_y: f64,
    pub ssim_cb: f64,
    pub ssim_cr: f64,
    pub mse_y: f64,
    pub mse_cb: f64,
    pub mse_cr: f64,
    #[serde(skip)]
    pub ssim_maps: Option<[SsimMap; 3]>,
}

impl MetricsReport {
    pub fn psnr(&self, channel: Channel) -> Db {
        match channel {
            Channel::Y => self.psnr_y,
            Channel::Cb => self.psnr_cb,
            Channel::Cr => self.psnr_cr,
        }
    }

    pub fn ssim(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Y => self.ssim_y,
            Channel::Cb => self.ssim_cb,
            Channel::Cr => self.ssim_cr,
        }
    }

    pub fn mse(&self, channel: Channel) -> f64 {
        match channel {
            Channel::Y => self.mse_y,
            Channel::Cb => self.mse_cb,
            Channel::Cr => self.mse_cr,
        }
    }
}

pub fn report(
    orig: &Frame,
    recon: &Frame,
    bit_depth: u8,
    keep_maps: bool,
) -> Result<MetricsReport> {
    let mut mses = [0.0; 3];
    let mut scores = [0.0; 3];
    let mut maps = Vec::with_capacity(3);
    for channel in Channel::ALL {
        let (a, b) = (orig.plane(channel), recon.plane(channel));
        mses[channel.index()] = mse(a, b)?;
        let (s, map) = ssim(a, b, bit_depth)?;
        scores[channel.index()] = s;
        maps.push(map);
    }
    let ssim_maps = if keep_maps {
        let [y, cb, cr]: [SsimMap; 3] = maps.try_into().expect("three channels");
        Some([y, cb, cr])
    } else {
        None
    };
    Ok(MetricsReport {
        psnr_y: psnr_from_mse(mses[0], bit_depth),
        psnr_cb: psnr_from_mse(mses[1], bit_depth),
        psnr_cr: psnr_from_mse(mses[2], bit_depth),
        ssim_y: scores[0],
        ssim_cb: scores[1],
        ssim_cr: scores[2],
        mse_y: mses[0],
        mse_cb: mses[1],
        mse_cr: mses[2],
        ssim_maps,
    })
}
