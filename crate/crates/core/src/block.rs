//! Flat coding-block partitioning and chroma block geometry.
//!
//! Every luma CB of edge `cb_size` has exactly one co-located Cb and Cr CB.
//! Chroma CBs are halved horizontally for 4:2:2 and in both directions for
//! 4:2:0. Blocks on the right and bottom frame edges overhang the plane; their
//! samples are completed by edge replication.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::yuv_io::{Plane, VideoSpec};

pub const SUPPORTED_CB_SIZES: [usize; 3] = [16, 32, 64];
pub const DEFAULT_CB_SIZE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channel {
    Y,
    Cb,
    Cr,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Y, Channel::Cb, Channel::Cr];

    pub fn is_chroma(self) -> bool {
        self != Channel::Y
    }

    pub fn index(self) -> usize {
        match self {
            Channel::Y => 0,
            Channel::Cb => 1,
            Channel::Cr => 2,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Y => "Y",
            Channel::Cb => "Cb",
            Channel::Cr => "Cr",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodingBlock {
    pub channel: Channel,
    /// Offset of the top-left sample within the channel's plane.
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
    pub luma_index: usize,
}

impl CodingBlock {
    /// Width and height of the part of the block inside a `plane_w`×`plane_h` plane.
    pub fn valid_dims(&self, plane_w: usize, plane_h: usize) -> (usize, usize) {
        (
            self.w.min(plane_w.saturating_sub(self.x)),
            self.h.min(plane_h.saturating_sub(self.y)),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockGrid {
    pub spec: VideoSpec,
    pub cb_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub luma_blocks: Vec<CodingBlock>,
    pub cb_blocks: Vec<CodingBlock>,
    pub cr_blocks: Vec<CodingBlock>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.luma_blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.luma_blocks.is_empty()
    }

    pub fn blocks(&self, channel: Channel) -> &[CodingBlock] {
        match channel {
            Channel::Y => &self.luma_blocks,
            Channel::Cb => &self.cb_blocks,
            Channel::Cr => &self.cr_blocks,
        }
    }

    /// Chroma CB dimensions for this grid's chroma format.
    pub fn chroma_block_dims(&self) -> (usize, usize) {
        let (sx, sy) = self.spec.chroma_format.subsampling();
        (self.cb_size / sx, self.cb_size / sy)
    }
}

pub fn partition(spec: &VideoSpec, cb_size: usize) -> Result<BlockGrid> {
    if !SUPPORTED_CB_SIZES.contains(&cb_size) {
        return Err(Error::UnsupportedBlockSize(cb_size));
    }
    spec.validate()?;
    let cols = spec.width.div_ceil(cb_size);
    let rows = spec.height.div_ceil(cb_size);
    let (sx, sy) = spec.chroma_format.subsampling();
    let (cw, ch) = (cb_size / sx, cb_size / sy);

    let n = cols * rows;
    let mut luma_blocks = Vec::with_capacity(n);
    let mut cb_blocks = Vec::with_capacity(n);
    let mut cr_blocks = Vec::with_capacity(n);
    for row in 0..rows {
        for col in 0..cols {
            let luma_index = row * cols + col;
            luma_blocks.push(CodingBlock {
                channel: Channel::Y,
                x: col * cb_size,
                y: row * cb_size,
                w: cb_size,
                h: cb_size,
                luma_index,
            });
            let chroma = CodingBlock {
                channel: Channel::Cb,
                x: col * cw,
                y: row * ch,
                w: cw,
                h: ch,
                luma_index,
            };
            cb_blocks.push(chroma);
            cr_blocks.push(CodingBlock {
                channel: Channel::Cr,
                ..chroma
            });
        }
    }
    Ok(BlockGrid {
        spec: *spec,
        cb_size,
        cols,
        rows,
        luma_blocks,
        cb_blocks,
        cr_blocks,
    })
}

/// Returns the `w×h` samples of `block`, replicating the last valid row and
/// column where the block overhangs the plane.
pub fn block_samples(plane: &Plane, channel: Channel, block: &CodingBlock) -> Result<Vec<u16>> {
    if block.channel != channel {
        return Err(Error::ChannelMismatch {
            block: block.channel,
            plane: channel,
        });
    }
    let mut out = Vec::with_capacity(block.w * block.h);
    let max_x = plane.width - 1;
    let max_y = plane.height - 1;
    for dy in 0..block.h {
        let row = plane.row((block.y + dy).min(max_y));
        out.extend((0..block.w).map(|dx| row[(block.x + dx).min(max_x)]));
    }
    Ok(out)
}

/// Returns only the samples of `block` that lie inside the plane.
pub fn valid_samples(plane: &Plane, block: &CodingBlock) -> Vec<u16> {
    let (vw, vh) = block.valid_dims(plane.width, plane.height);
    let mut out = Vec::with_capacity(vw * vh);
    for dy in 0..vh {
        let row = plane.row(block.y + dy);
        out.extend_from_slice(&row[block.x..block.x + vw]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::yuv_io::ChromaFormat;

    fn spec(w: usize, h: usize, cf: ChromaFormat) -> VideoSpec {
        VideoSpec::new(w, h, 8, cf, 1).unwrap()
    }

    #[test]
    fn chroma_geometry_per_format() {
        let g = partition(&spec(1920, 1080, ChromaFormat::C420), 64).unwrap();
        assert_eq!((g.cb_blocks[0].w, g.cb_blocks[0].h), (32, 32));
        let g = partition(&spec(1920, 1080, ChromaFormat::C422), 64).unwrap();
        assert_eq!((g.cb_blocks[0].w, g.cb_blocks[0].h), (32, 64));
        let g = partition(&spec(1920, 1080, ChromaFormat::C444), 64).unwrap();
        assert_eq!((g.cr_blocks[0].w, g.cr_blocks[0].h), (64, 64));
    }

    #[test]
    fn hd_block_count() {
        let g = partition(&spec(1920, 1080, ChromaFormat::C420), 64).unwrap();
        assert_eq!((g.cols, g.rows, g.len()), (30, 17, 510));
    }

    #[test]
    fn unsupported_size() {
        assert!(matches!(
            partition(&spec(64, 64, ChromaFormat::C444), 8),
            Err(Error::UnsupportedBlockSize(8))
        ));
    }

    #[test]
    fn tiling_and_geometry_laws() {
        for cf in [ChromaFormat::C420, ChromaFormat::C422, ChromaFormat::C444] {
            for cb in SUPPORTED_CB_SIZES {
                let s = spec(200, 94, cf);
                let g = partition(&s, cb).unwrap();
                let padded_w = s.width.div_ceil(cb) * cb;
                let padded_h = s.height.div_ceil(cb) * cb;
                let mut covered = vec![0u8; padded_w * padded_h];
                for b in &g.luma_blocks {
                    for y in b.y..b.y + b.h {
                        for x in b.x..b.x + b.w {
                            covered[y * padded_w + x] += 1;
                        }
                    }
                }
                assert!(covered.iter().all(|&c| c == 1));

                let (sx, sy) = cf.subsampling();
                for (i, (cbk, crk)) in g.cb_blocks.iter().zip(&g.cr_blocks).enumerate() {
                    let l = &g.luma_blocks[i];
                    assert_eq!((cbk.x, cbk.y, cbk.w, cbk.h), (crk.x, crk.y, crk.w, crk.h));
                    assert_eq!((cbk.w * sx, cbk.h * sy), (l.w, l.h));
                    assert_eq!((cbk.x * sx, cbk.y * sy), (l.x, l.y));
                    assert_eq!(cbk.luma_index, l.luma_index);
                }
            }
        }
    }

    #[test]
    fn interior_block_verbatim() {
        let mut p = Plane::filled(128, 128, 0);
        for (i, s) in p.samples.iter_mut().enumerate() {
            *s = (i % 1000) as u16;
        }
        let b = CodingBlock {
            channel: Channel::Y,
            x: 64,
            y: 0,
            w: 64,
            h: 64,
            luma_index: 1,
        };
        let got = block_samples(&p, Channel::Y, &b).unwrap();
        assert_eq!(got.len(), 4096);
        for dy in 0..64 {
            for dx in 0..64 {
                assert_eq!(got[dy * 64 + dx], p.get(64 + dx, dy));
            }
        }
    }

    #[test]
    fn right_edge_replication() {
        let mut p = Plane::filled(24, 16, 0);
        for y in 0..16 {
            for x in 0..24 {
                p.set(x, y, (y * 100 + x) as u16);
            }
        }
        let b = CodingBlock {
            channel: Channel::Cb,
            x: 16,
            y: 0,
            w: 16,
            h: 16,
            luma_index: 1,
        };
        let got = block_samples(&p, Channel::Cb, &b).unwrap();
        for y in 0..16 {
            for dx in 8..16 {
                assert_eq!(got[y * 16 + dx], p.get(23, y));
            }
        }
        assert_eq!(valid_samples(&p, &b).len(), 8 * 16);
        assert_eq!(b.valid_dims(24, 16), (8, 16));
    }

    #[test]
    fn single_sample_plane() {
        let p = Plane::filled(1, 1, 77);
        let b = CodingBlock {
            channel: Channel::Y,
            x: 0,
            y: 0,
            w: 16,
            h: 16,
            luma_index: 0,
        };
        let got = block_samples(&p, Channel::Y, &b).unwrap();
        assert_eq!(got, vec![77; 256]);
    }

    #[test]
    fn channel_mismatch() {
        let p = Plane::filled(4, 4, 0);
        let b = CodingBlock {
            channel: Channel::Cr,
            x: 0,
            y: 0,
            w: 4,
            h: 4,
            luma_index: 0,
        };
        assert!(matches!(
            block_samples(&p, Channel::Cb, &b),
            Err(Error::ChannelMismatch { .. })
        ));
    }
}
