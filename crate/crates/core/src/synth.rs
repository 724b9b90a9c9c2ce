//! Seeded synthetic test sequences: smooth gradients, low-pass coloured noise
//! and saturated rectangular patches that drift from frame to frame.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::block::Channel;
use crate::error::Result;
use crate::yuv_io::{create_sequence, Frame, Plane, VideoSpec};

#[derive(Debug, Clone, Copy)]
pub struct SynthConfig {
    pub spec: VideoSpec,
    pub seed: u64,
    /// Noise amplitude as a fraction of the sample range.
    pub luma_noise: f64,
    pub chroma_noise: f64,
}

impl SynthConfig {
    pub fn new(spec: VideoSpec, seed: u64) -> Self {
        SynthConfig {
            spec,
            seed,
            luma_noise: 0.04,
            chroma_noise: 0.06,
        }
    }
}

fn box_blur(img: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let n = (2 * radius + 1) as f64;
    let at = |v: isize, max: usize| v.clamp(0, max as isize - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (-r..=r)
                .map(|d| img[y * w + at(x as isize + d, w)])
                .sum::<f64>()
                / n;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (-r..=r)
                .map(|d| tmp[at(y as isize + d, h) * w + x])
                .sum::<f64>()
                / n;
        }
    }
    out
}

fn synth_plane(
    cfg: &SynthConfig,
    channel: Channel,
    frame_index: usize,
    rng: &mut ChaCha8Rng,
) -> Plane {
    let (w, h) = cfg.spec.plane_dims(channel);
    let max = f64::from(cfg.spec.max_sample());
    let t = frame_index as f64;

    // unit-variance-ish low-pass noise
    let white: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let noise = box_blur(&white, w, h, 1);
    let amp =
        max * match channel {
            Channel::Y => cfg.luma_noise,
            _ => cfg.chroma_noise,
        } * 3.0;

    let (fx, fy) = (w.max(2) as f64 - 1.0, h.max(2) as f64 - 1.0);
    let mut samples = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (u, v) = (x as f64 / fx, y as f64 / fy);
            let drift = 0.05 * (t * 0.2).sin();
            let base = match channel {
                Channel::Y => 0.05 + 0.9 * (0.6 * u + 0.4 * v + drift).clamp(0.0, 1.0),
                Channel::Cb => (0.15 + 0.8 * v - 0.1 * u + drift).clamp(0.0, 1.0),
                Channel::Cr => (0.95 - 0.85 * u + 0.05 * v - drift).clamp(0.0, 1.0),
            };
            samples.push(base * max + amp * noise[y * w + x]);
        }
    }

    // saturated patches, positions in luma-relative units
    let (sx, sy) = match channel {
        Channel::Y => (1, 1),
        _ => cfg.spec.chroma_format.subsampling(),
    };
    let patches = [
        (0.10, 0.15, 0.18, 0.30, 0.0, 1.5),
        (0.55, 0.55, 0.25, 0.35, 1.0, -1.0),
        (0.75, 0.05, 0.15, 0.25, 1.0, 0.7),
    ];
    for (i, &(px, py, pw, ph, level, speed)) in patches.iter().enumerate() {
        let luma_w = cfg.spec.width as f64;
        let luma_h = cfg.spec.height as f64;
        let x0 = ((px * luma_w + speed * 2.0 * t).rem_euclid(luma_w)) as usize / sx;
        let y0 = ((py * luma_h + speed * t).rem_euclid(luma_h)) as usize / sy;
        let pw = ((pw * luma_w) as usize / sx).max(1);
        let ph = ((ph * luma_h) as usize / sy).max(1);
        // chroma patches alternate extremes between Cb and Cr
        let value = match (channel, i % 2) {
            (Channel::Cr, 0) => max * (1.0 - level),
            _ => max * level,
        };
        for y in y0..(y0 + ph).min(h) {
            for x in x0..(x0 + pw).min(w) {
                samples[y * w + x] = value;
            }
        }
    }

    Plane {
        width: w,
        height: h,
        samples: samples
            .into_iter()
            .map(|s| s.round().clamp(0.0, max) as u16)
            .collect(),
    }
}

/// Frame `index` of the sequence; independent of every other frame.
pub fn synth_frame(cfg: &SynthConfig, index: usize) -> Frame {
    let mut rng =
        ChaCha8Rng::seed_from_u64(cfg.seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let y = synth_plane(cfg, Channel::Y, index, &mut rng);
    let cb = synth_plane(cfg, Channel::Cb, index, &mut rng);
    let cr = synth_plane(cfg, Channel::Cr, index, &mut rng);
    Frame { y, cb, cr }
}

pub fn synth_sequence(cfg: &SynthConfig) -> Vec<Frame> {
    (0..cfg.spec.frame_count)
        .into_par_iter()
        .map(|i| synth_frame(cfg, i))
        .collect()
}

pub fn write_synth_sequence(path: &Path, cfg: &SynthConfig) -> Result<()> {
    let mut sink = create_sequence(path, cfg.spec)?;
    for frame in synth_sequence(cfg) {
        sink.write_frame(&frame)?;
    }
    sink.finish()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::yuv_io::ChromaFormat;

    #[test]
    fn deterministic_and_valid() {
        for cf in [ChromaFormat::C420, ChromaFormat::C422, ChromaFormat::C444] {
            let spec = VideoSpec::new(96, 64, 10, cf, 3).unwrap();
            let cfg = SynthConfig::new(spec, 42);
            let a = synth_sequence(&cfg);
            let b = synth_sequence(&cfg);
            assert_eq!(a, b);
            for f in &a {
                f.validate(&spec).unwrap();
            }
            assert_ne!(a[0], a[1]);
        }
    }

    #[test]
    fn has_saturated_samples() {
        let spec = VideoSpec::new(416, 240, 10, ChromaFormat::C444, 1).unwrap();
        let f = synth_frame(&SynthConfig::new(spec, 1), 0);
        assert!(f.y.samples.contains(&1023));
        assert!(f.y.samples.contains(&0));
        assert!(f.cb.samples.contains(&0) && f.cr.samples.contains(&1023));
    }
}
